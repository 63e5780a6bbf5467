#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hyperscore/evalkit.hpp"
#include "hyperscore/hyperhead.hpp"
#include "hyperscore/index.hpp"
#include "hyperscore/index_io.hpp"
#include "hyperscore/parallel.hpp"
#include "hyperscore/qnet.hpp"
#include "hyperscore/radon.hpp"
#include "hyperscore/rng.hpp"
#include "hyperscore/synthetic.hpp"
#include "hyperscore/tensor_io.hpp"
#include "hyperscore/trainer.hpp"

using namespace hyperscore;

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

/// Applies --config JSON values to any option the command line left at its
/// default. Unknown keys are config errors so typos fail loudly.
class ConfigBinder {
  public:
    explicit ConfigBinder(CLI::App* cmd) : cmd_(cmd) {
        cmd->add_option("--config", path_, "JSON config file; explicit flags win");
    }

    template <class T>
    void bind(const std::string& key, const std::string& flag, T& target) {
        appliers_[key] = {flag, [&target](const json& v) { target = v.get<T>(); }};
    }

    void apply() const {
        if (path_.empty()) return;
        std::ifstream in(path_);
        if (!in) throw ConfigError("config: cannot open " + path_);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw FormatError(FormatError::Code::malformed, "config " + path_ + ": " + e.what());
        }
        if (!j.is_object()) throw ConfigError("config " + path_ + ": top level must be an object");
        for (auto it = j.begin(); it != j.end(); ++it) {
            auto found = appliers_.find(it.key());
            if (found == appliers_.end())
                throw ConfigError("config " + path_ + ": unknown key \"" + it.key() + "\"");
            if (cmd_->count(found->second.first) > 0) continue;
            try {
                found->second.second(it.value());
            } catch (const json::exception& e) {
                throw ConfigError("config " + path_ + ": key \"" + it.key() + "\": " + e.what());
            }
        }
    }

  private:
    CLI::App* cmd_;
    std::string path_;
    std::map<std::string, std::pair<std::string, std::function<void(const json&)>>> appliers_;
};

struct ParsedQuery {
    std::string qid;
    std::vector<int> tokens;
};

std::vector<ParsedQuery> read_queries(const std::string& path, int vocab) {
    std::ifstream in(path);
    if (!in) throw FormatError(FormatError::Code::malformed, "cannot open queries: " + path);
    std::vector<ParsedQuery> queries;
    std::set<std::string> seen;
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& why) -> void {
        throw FormatError(FormatError::Code::malformed,
                          path + ":" + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        ParsedQuery q;
        ss >> q.qid;
        std::string tok;
        while (ss >> tok) {
            std::size_t used = 0;
            int value = 0;
            try {
                value = std::stoi(tok, &used);
            } catch (const std::exception&) {
                fail("bad token \"" + tok + "\"");
            }
            if (used != tok.size()) fail("bad token \"" + tok + "\"");
            if (value < 0 || value >= vocab)
                fail("token " + tok + " outside vocab [0, " + std::to_string(vocab) + ")");
            q.tokens.push_back(value);
        }
        if (q.qid.empty() || q.tokens.empty()) fail("expected \"qid tok1 [tok2 ...]\"");
        if (!seen.insert(q.qid).second) fail("duplicate query id " + q.qid);
        queries.push_back(std::move(q));
    }
    if (queries.empty())
        throw FormatError(FormatError::Code::malformed, "queries file is empty: " + path);
    return queries;
}

std::string format_number(double v) {
    char buf[64];
    if (v == std::floor(v) && std::abs(v) < 1e15)
        std::snprintf(buf, sizeof(buf), "%.0f", v);
    else
        std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string format_point(const MatD& points, int row) {
    std::string out = "(";
    for (Eigen::Index c = 0; c < points.cols(); ++c) {
        if (c > 0) out += ",";
        out += format_number(points(row, c));
    }
    return out + ")";
}

std::string format_side(const MatD& points, const std::vector<int>& side) {
    std::string out = "{";
    for (std::size_t i = 0; i < side.size(); ++i) {
        if (i > 0) out += ",";
        out += format_point(points, side[i]);
    }
    return out + "}";
}

/// min over one hull of w.p can never exceed max over the other, because the
/// witness point lies in both hulls. Checked over random scorers.
bool hulls_linearly_inseparable(const RadonInstance& inst, int trials, std::uint64_t seed) {
    Rng rng(seed);
    const Eigen::Index h = inst.points.cols();
    for (int t = 0; t < trials; ++t) {
        VecD w(h);
        for (Eigen::Index i = 0; i < h; ++i) w[i] = 4 * rng.gaussian();
        double min_a = 1e300, max_a = -1e300, min_b = 1e300, max_b = -1e300;
        for (int i : inst.side_a) {
            double s = w.dot(inst.points.row(i));
            min_a = std::min(min_a, s);
            max_a = std::max(max_a, s);
        }
        for (int i : inst.side_b) {
            double s = w.dot(inst.points.row(i));
            min_b = std::min(min_b, s);
            max_b = std::max(max_b, s);
        }
        const double tol = 1e-9 * (1 + std::max(std::abs(max_a), std::abs(max_b)));
        if (min_a > max_b + tol || min_b > max_a + tol) return false;
    }
    return true;
}

/// Fraction of task queries whose relevant docs all outscore every irrelevant
/// doc under the trained model.
std::pair<int, int> separation_count(const ToyModel& model, const SyntheticTask& task) {
    int separated = 0;
    for (const auto& query : task.queries) {
        QNet<double> qnet = build_qnet(model.encoder.encode(query.tokens), model.head, model.eps);
        VecD scores = score_batch(qnet, task.corpus.vectors);
        double worst_rel = 1e300, best_irr = -1e300;
        const auto& judged = task.qrels.at(query.qid);
        for (Eigen::Index d = 0; d < scores.size(); ++d) {
            auto it = judged.find(task.corpus.doc_ids[std::size_t(d)]);
            const bool relevant = it != judged.end() && it->second > 0;
            if (relevant)
                worst_rel = std::min(worst_rel, scores[d]);
            else
                best_irr = std::max(best_irr, scores[d]);
        }
        if (worst_rel > best_irr) ++separated;
    }
    return {separated, int(task.queries.size())};
}

struct IngestOptions {
    std::string vectors, ids, out;
    std::uint32_t dim = 0;
};

void run_ingest(const IngestOptions& opt) {
    if (opt.dim == 0) throw ConfigError("ingest: --dim must be >= 1");
    std::ifstream id_in(opt.ids);
    if (!id_in) throw FormatError(FormatError::Code::malformed, "cannot open ids: " + opt.ids);
    std::vector<std::string> ids;
    std::set<std::string> seen;
    std::string line;
    while (std::getline(id_in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && id_in.peek() == EOF) break;  // trailing newline
        if (line.empty() || line.find_first_of(" \t") != std::string::npos)
            throw FormatError(FormatError::Code::malformed,
                              opt.ids + ": line " + std::to_string(ids.size() + 1) +
                                  ": ids must be nonempty and whitespace-free");
        if (!seen.insert(line).second)
            throw FormatError(FormatError::Code::malformed, opt.ids + ": duplicate id " + line);
        ids.push_back(line);
    }
    if (ids.empty()) throw FormatError(FormatError::Code::malformed, opt.ids + ": no ids");

    std::error_code ec;
    const auto bytes = std::filesystem::file_size(opt.vectors, ec);
    if (ec) throw FormatError(FormatError::Code::malformed, "cannot stat vectors: " + opt.vectors);
    const std::uintmax_t row_bytes = std::uintmax_t(opt.dim) * sizeof(float);
    if (bytes == 0 || bytes % row_bytes != 0)
        throw FormatError(FormatError::Code::truncated,
                          opt.vectors + ": " + std::to_string(bytes) +
                              " bytes is not a multiple of dim*4 = " + std::to_string(row_bytes));
    const std::uintmax_t n = bytes / row_bytes;
    if (n != ids.size())
        throw FormatError(FormatError::Code::malformed,
                          std::to_string(n) + " vectors but " + std::to_string(ids.size()) + " ids");

    Corpus<float> corpus;
    corpus.doc_ids = std::move(ids);
    corpus.vectors.resize(Eigen::Index(n), Eigen::Index(opt.dim));
    std::ifstream vec_in(opt.vectors, std::ios::binary);
    if (!vec_in.read(reinterpret_cast<char*>(corpus.vectors.data()), std::streamsize(bytes)))
        throw FormatError(FormatError::Code::truncated, opt.vectors + ": short read");
    if (!all_finite(corpus.vectors))
        throw FormatError(FormatError::Code::malformed, opt.vectors + ": non-finite values");

    DocGraph graph;
    graph.neighbors.resize(Eigen::Index(n), 0);
    save_index(corpus, graph, opt.out);
    std::printf("ingested %ju docs, dim %u -> %s\n", n, opt.dim, opt.out.c_str());
}

struct BuildIndexOptions {
    std::string corpus, out;
    std::uint32_t graph_degree = 0;  // 0 = auto
};

void run_build_index(const BuildIndexOptions& opt) {
    auto [corpus, old_graph] = load_index(opt.corpus);
    const auto n = corpus.size();
    std::uint32_t g = opt.graph_degree;
    if (g == 0) g = n >= 10000 ? 100 : 16;
    const auto start = Clock::now();
    DocGraph graph = build_graph(corpus, g);
    const double elapsed = ms_since(start);
    save_index(corpus, graph, opt.out);
    std::printf("built graph over %zu docs, degree %u, %.1f ms -> %s\n", std::size_t(n), g,
                elapsed, opt.out.c_str());
}

struct SearchOptions {
    std::string index, model, queries, out;
    std::string mode = "exhaustive";
    std::string precision = "f64";
    std::string runtag = "hyperscore";
    SearchParams params;
};

template <class Scalar>
std::vector<SearchResult> run_queries(const std::vector<ParsedQuery>& queries,
                                      const ToyModel& model, const Corpus<Scalar>& corpus,
                                      const DocGraph& graph, const SearchOptions& opt) {
    std::vector<SearchResult> results(queries.size());
    std::vector<std::exception_ptr> errors(queries.size());
    parallel_for(0, std::int64_t(queries.size()), [&](std::int64_t i) {
        try {
            QNet<double> qnet =
                build_qnet(model.encoder.encode(queries[std::size_t(i)].tokens), model.head,
                           model.eps);
            QNet<Scalar> cast = cast_qnet<Scalar>(qnet);
            if (opt.mode == "graph") {
                SearchParams params = opt.params;
                params.rng_seed += std::uint64_t(i);
                results[std::size_t(i)] = graph_search(cast, graph, corpus, params);
            } else {
                results[std::size_t(i)] = exhaustive_search(cast, corpus, opt.params.k);
            }
        } catch (...) {
            errors[std::size_t(i)] = std::current_exception();
        }
    });
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

void run_search(const SearchOptions& opt) {
    if (opt.mode != "exhaustive" && opt.mode != "graph")
        throw ConfigError("search: --mode must be exhaustive or graph, got " + opt.mode);
    if (opt.precision != "f32" && opt.precision != "f64")
        throw ConfigError("search: --precision must be f32 or f64, got " + opt.precision);
    auto [corpus, graph] = load_index(opt.index);
    if (opt.mode == "graph" && graph.degree() == 0)
        throw ConfigError("search: index has no graph; run build-index first");
    ToyModel model = load_model(opt.model);
    if (model.encoder.dim != int(corpus.vectors.cols()))
        throw ConfigError("search: model dim " + std::to_string(model.encoder.dim) +
                          " vs corpus dim " + std::to_string(corpus.vectors.cols()));
    auto queries = read_queries(opt.queries, model.encoder.vocab_size);

    const auto start = Clock::now();
    std::vector<SearchResult> results;
    if (opt.precision == "f32") {
        results = run_queries(queries, model, corpus, graph, opt);
    } else {
        Corpus<double> wide = cast_corpus<double>(corpus);
        results = run_queries(queries, model, wide, graph, opt);
    }
    const double elapsed = ms_since(start);

    eval::Run run;
    double total_scored = 0;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        auto& entries = run[queries[i].qid];
        for (const auto& [id, score] : results[i].ranked) entries.push_back({id, score});
        total_scored += double(results[i].stats.scored_count);
    }
    eval::write_run(run, opt.runtag, opt.out);
    std::printf("searched %zu queries (%s, %s): %.2f ms/query, %.1f docs scored/query -> %s\n",
                queries.size(), opt.mode.c_str(), opt.precision.c_str(),
                elapsed / double(queries.size()), total_scored / double(queries.size()),
                opt.out.c_str());
}

struct TrainOptions {
    std::string dataset, out, loss_log;
    TrainConfig config;
    bool dim_given = false;
    bool vocab_given = false;
};

void run_train_toy(const TrainOptions& opt) {
    auto dataset = read_dataset(opt.dataset);
    if (dataset.empty())
        throw FormatError(FormatError::Code::malformed, opt.dataset + ": empty dataset");
    const Eigen::Index data_dim = dataset[0].positive.size();
    int max_token = -1;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (dataset[i].positive.size() != data_dim)
            throw FormatError(FormatError::Code::malformed,
                              opt.dataset + ": example " + std::to_string(i) + " has dim " +
                                  std::to_string(dataset[i].positive.size()) + ", expected " +
                                  std::to_string(data_dim));
        for (int t : dataset[i].query_tokens) max_token = std::max(max_token, t);
    }
    TrainConfig config = opt.config;
    if (!opt.dim_given) config.dim = int(data_dim);
    if (config.dim != int(data_dim))
        throw ConfigError("train-toy: --dim " + std::to_string(config.dim) +
                          " but dataset vectors have dim " + std::to_string(data_dim));
    if (!opt.vocab_given) config.vocab = max_token + 1;
    if (max_token >= config.vocab)
        throw ConfigError("train-toy: dataset token " + std::to_string(max_token) +
                          " outside vocab " + std::to_string(config.vocab));

    const auto start = Clock::now();
    TrainResult result = train_toy(dataset, config);
    const double elapsed = ms_since(start);
    save_model(result.model, opt.out);
    if (!opt.loss_log.empty()) {
        std::ofstream log(opt.loss_log, std::ios::trunc);
        if (!log) throw ConfigError("train-toy: cannot open loss log " + opt.loss_log);
        for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%zu %.10g\n", i, result.loss_trace[i]);
            log << buf;
        }
    }
    std::printf("trained %d steps on %zu examples in %.1f ms: loss %.6g -> %.6g, model -> %s\n",
                config.steps, dataset.size(), elapsed, result.loss_trace.front(),
                result.loss_trace.back(), opt.out.c_str());
}

struct EvalOptions {
    std::string run, qrels;
    int k = 10;
    int cutoff = 10;
    bool per_query = false;
};

void run_eval(const EvalOptions& opt) {
    eval::Run run = eval::read_run(opt.run);
    eval::Qrels qrels = eval::read_qrels(opt.qrels);
    struct Row {
        std::string name;
        eval::MetricReport report;
    };
    std::vector<Row> rows{
        {"ndcg@" + std::to_string(opt.k), eval::ndcg_at_k(run, qrels, opt.k)},
        {"rr@" + std::to_string(opt.cutoff), eval::reciprocal_rank(run, qrels, opt.cutoff)},
        {"recall@" + std::to_string(opt.k), eval::recall_at_k(run, qrels, opt.k)},
    };
    std::printf("%-12s %10s %10s %8s\n", "metric", "mean", "evaluated", "skipped");
    for (const auto& row : rows) {
        std::printf("%-12s %10.4f %10d %8zu\n", row.name.c_str(), row.report.mean,
                    row.report.evaluated, row.report.skipped.size());
    }
    for (const auto& row : rows) {
        for (const auto& qid : row.report.skipped)
            std::printf("# %s skipped %s (no relevant docs)\n", row.name.c_str(), qid.c_str());
    }
    if (opt.per_query) {
        std::printf("\n%-12s %-12s %10s\n", "metric", "query", "value");
        for (const auto& row : rows)
            for (const auto& [qid, value] : row.report.per_query)
                std::printf("%-12s %-12s %10.4f\n", row.name.c_str(), qid.c_str(), value);
    }
}

struct DemoRadonOptions {
    std::string kind = "xor";
    int dim = 8;        // training dim
    int points_dim = 0; // geometry dim for kind=radon; 0 = 4
    int steps = 2000;
    std::uint64_t seed = 0;
};

void run_demo_radon(const DemoRadonOptions& opt) {
    RadonInstance instance;
    SyntheticTask task;
    if (opt.kind == "xor") {
        MatD corners(4, 2);
        corners << 0, 0, 1, 1, 1, 0, 0, 1;
        instance = radon_partition(corners);
        task = gen_xor_task(4, opt.dim, opt.seed);
    } else if (opt.kind == "radon") {
        const int h = opt.points_dim > 0 ? opt.points_dim : 4;
        task = gen_radon_task(4, h, opt.seed);
        instance = *task.radon;
    } else {
        throw ConfigError("demo-radon: --kind must be xor or radon, got " + opt.kind);
    }

    std::printf("instance: %td points in R^%td\n", instance.points.rows(), instance.points.cols());
    for (Eigen::Index i = 0; i < instance.points.rows(); ++i)
        std::printf("  [%td] %s\n", i, format_point(instance.points, int(i)).c_str());

    // print the side containing point 0 first
    const bool zero_in_a =
        std::find(instance.side_a.begin(), instance.side_a.end(), 0) != instance.side_a.end();
    const auto& first = zero_in_a ? instance.side_a : instance.side_b;
    const auto& second = zero_in_a ? instance.side_b : instance.side_a;
    std::printf("partition: %s | %s\n", format_side(instance.points, first).c_str(),
                format_side(instance.points, second).c_str());

    VecD witness = radon_witness(instance);
    std::string witness_str = "(";
    for (Eigen::Index i = 0; i < witness.size(); ++i) {
        if (i > 0) witness_str += ",";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4g", witness[i]);
        witness_str += buf;
    }
    witness_str += ")";
    std::printf("witness: %s  residual: %.3g\n", witness_str.c_str(),
                radon_witness_residual(instance));

    if (opt.kind == "xor")
        std::printf("identity: f(0,0) + f(1,1) = f(1,0) + f(0,1) for every linear f(x) = w.x + b\n");
    const int trials = 100000;
    if (!hulls_linearly_inseparable(instance, trials, opt.seed + 1))
        throw NumericError("demo-radon: a random linear scorer separated the hulls");
    std::printf("linear impossibility: no strict separation over %d random scorers\n", trials);

    TrainConfig config;
    config.dim = opt.kind == "xor" ? opt.dim : int(task.corpus.vectors.cols());
    config.qnet_layers = 2;
    config.vocab = task.vocab_size;
    config.lr = 2e-3;
    config.steps = opt.steps;
    config.batch_size = int(task.training.size());  // full batch: near-deterministic descent
    config.ce_weight = 0.05;
    config.seed = opt.seed;
    std::printf("training q-net generator: dim=%d layers=%d steps=%d\n", config.dim,
                config.qnet_layers, config.steps);
    TrainResult result = train_toy(task.training, config);
    auto [separated, total] = separation_count(result.model, task);
    std::printf("separation: %d/%d queries rank every relevant doc above every irrelevant doc\n",
                separated, total);
    std::printf("final loss: %.6g\n", result.loss_trace.back());
}

struct DepthSweepOptions {
    int dim = 8;
    int steps = 800;
    std::uint64_t seed = 0;
};

void run_depth_sweep(const DepthSweepOptions& opt) {
    std::printf("%-8s %12s %12s %10s %10s\n", "layers", "final_loss", "separation", "ndcg@4",
                "seconds");
    for (int layers : {2, 4, 6, 8}) {
        SyntheticTask task = gen_xor_task(4, opt.dim, opt.seed);
        TrainConfig config;
        config.dim = opt.dim;
        config.qnet_layers = layers;
        config.vocab = task.vocab_size;
        config.lr = 2e-3;
        config.steps = opt.steps;
        config.batch_size = int(task.training.size());
        config.ce_weight = 0.05;
        config.seed = opt.seed;
        const auto start = Clock::now();
        TrainResult result = train_toy(task.training, config);
        const double seconds = ms_since(start) / 1000.0;

        double tail = 0;
        const int window = std::min<int>(20, int(result.loss_trace.size()));
        for (int i = 0; i < window; ++i)
            tail += result.loss_trace[result.loss_trace.size() - 1 - std::size_t(i)];
        tail /= window;

        auto [separated, total] = separation_count(result.model, task);

        eval::Run run;
        for (const auto& query : task.queries) {
            QNet<double> qnet = build_qnet(result.model.encoder.encode(query.tokens),
                                           result.model.head, result.model.eps);
            SearchResult ranked = exhaustive_search(qnet, task.corpus, 4);
            for (const auto& [id, score] : ranked.ranked) run[query.qid].push_back({id, score});
        }
        const double ndcg = eval::ndcg_at_k(run, task.qrels, 4).mean;

        char sep[16];
        std::snprintf(sep, sizeof(sep), "%d/%d", separated, total);
        std::printf("%-8d %12.6f %12s %10.4f %10.2f\n", layers, tail, sep, ndcg, seconds);
    }
    std::printf("depth sweep complete: 4 configurations\n");
}

struct BenchOptions {
    int n_docs = 20000;
    int dim = 32;
    int n_clusters = 50;
    std::uint32_t graph_degree = 32;
    int n_queries = 20;
    int qnet_layers = 2;
    SearchParams params;
    std::uint64_t seed = 0;
};

void run_bench(const BenchOptions& opt) {
    SyntheticSizes sizes;
    sizes.n_queries = 1;  // corpus only; queries come from random q-nets
    sizes.dim = opt.dim;
    sizes.n_docs = opt.n_docs;
    sizes.n_clusters = opt.n_clusters;
    auto build_start = Clock::now();
    SyntheticTask task = gen_cluster_task(sizes, opt.seed);
    const Corpus<double>& corpus = task.corpus;
    const double gen_ms = ms_since(build_start);

    build_start = Clock::now();
    DocGraph graph = build_graph(corpus, opt.graph_degree);
    const double graph_ms = ms_since(build_start);
    std::printf("corpus: N=%d h=%d clusters=%d (%.0f ms); graph degree %u (%.0f ms)\n", opt.n_docs,
                opt.dim, opt.n_clusters, gen_ms, opt.graph_degree, graph_ms);
    std::printf("params: initial_candidates=%u n_candidates=%u max_iter=%u k=%u\n",
                opt.params.initial_candidates, opt.params.n_candidates, opt.params.max_iter,
                opt.params.k);

    struct Row {
        double ms = 0, scored = 0, recall = 0;
        std::uint64_t early_stops = 0;
    };
    Row exhaustive, with_stop, without_stop;
    for (int i = 0; i < opt.n_queries; ++i) {
        QNet<double> qnet = random_qnet<double>(opt.dim, opt.qnet_layers, opt.seed * 1000 + i);

        auto t0 = Clock::now();
        SearchResult exact = exhaustive_search(qnet, corpus, opt.params.k);
        exhaustive.ms += ms_since(t0);
        exhaustive.scored += double(exact.stats.scored_count);
        exhaustive.recall += 1.0;

        std::set<std::string> exact_ids;
        for (const auto& [id, s] : exact.ranked) exact_ids.insert(id);

        auto measure = [&](bool early_stop, Row& row) {
            SearchParams params = opt.params;
            params.early_stop = early_stop;
            params.rng_seed = opt.seed + std::uint64_t(i);
            auto t1 = Clock::now();
            SearchResult approx = graph_search(qnet, graph, corpus, params);
            row.ms += ms_since(t1);
            row.scored += double(approx.stats.scored_count);
            row.early_stops += approx.stats.early_stopped ? 1 : 0;
            int hit = 0;
            for (const auto& [id, s] : approx.ranked)
                if (exact_ids.count(id)) ++hit;
            row.recall += double(hit) / double(exact_ids.size());
        };
        measure(true, with_stop);
        measure(false, without_stop);
    }

    const double q = double(opt.n_queries);
    std::printf("%-16s %10s %12s %10s %12s\n", "method", "mean_ms", "mean_scored", "recall",
                "early_stops");
    std::printf("%-16s %10.3f %12.1f %10.3f %12s\n", "exhaustive", exhaustive.ms / q,
                exhaustive.scored / q, exhaustive.recall / q, "-");
    std::printf("%-16s %10.3f %12.1f %10.3f %12ju\n", "graph", with_stop.ms / q,
                with_stop.scored / q, with_stop.recall / q, std::uintmax_t(with_stop.early_stops));
    std::printf("%-16s %10.3f %12.1f %10.3f %12ju\n", "graph_no_stop", without_stop.ms / q,
                without_stop.scored / q, without_stop.recall / q,
                std::uintmax_t(without_stop.early_stops));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hyperscore: query-conditioned scoring networks over vector corpora"};
    app.require_subcommand(1);

    IngestOptions ingest_opt;
    auto* ingest = app.add_subcommand("ingest", "pack raw f32 vectors + id sidecar into a corpus");
    ConfigBinder ingest_cfg(ingest);
    ingest->add_option("--vectors", ingest_opt.vectors, "raw little-endian f32 matrix file")
        ->required();
    ingest->add_option("--ids", ingest_opt.ids, "newline-delimited ids, line i = row i")->required();
    ingest->add_option("--dim", ingest_opt.dim, "vector dimension")->required();
    ingest->add_option("--out", ingest_opt.out, "output corpus file")->required();
    ingest->callback([&] {
        ingest_cfg.apply();
        run_ingest(ingest_opt);
    });

    BuildIndexOptions build_opt;
    auto* build = app.add_subcommand("build-index", "add a nearest-neighbor graph to a corpus");
    ConfigBinder build_cfg(build);
    build->add_option("--corpus", build_opt.corpus, "input corpus file")->required();
    build->add_option("--out", build_opt.out, "output index file")->required();
    build->add_option("--graph-degree", build_opt.graph_degree,
                      "neighbors per doc (default 100 if N >= 10000 else 16)");
    build_cfg.bind("graph_degree", "--graph-degree", build_opt.graph_degree);
    build->callback([&] {
        build_cfg.apply();
        run_build_index(build_opt);
    });

    SearchOptions search_opt;
    auto* search = app.add_subcommand("search", "run queries against an index, emit a TREC run");
    ConfigBinder search_cfg(search);
    search->add_option("--index", search_opt.index, "index file")->required();
    search->add_option("--model", search_opt.model, "trained model file")->required();
    search->add_option("--queries", search_opt.queries, "lines \"qid tok1 tok2 ...\"")->required();
    search->add_option("--out", search_opt.out, "output run file")->required();
    search->add_option("--mode", search_opt.mode, "exhaustive | graph");
    search->add_option("--precision", search_opt.precision, "f32 | f64 scoring precision");
    search->add_option("--runtag", search_opt.runtag, "run tag in the output");
    search->add_option("--k", search_opt.params.k, "results per query");
    search->add_option("--initial-candidates", search_opt.params.initial_candidates,
                       "seed sample size");
    search->add_option("--n-candidates", search_opt.params.n_candidates, "frontier width");
    search->add_option("--max-iter", search_opt.params.max_iter, "iteration cap");
    search->add_flag("--early-stop,!--no-early-stop", search_opt.params.early_stop,
                     "stop when the frontier stops improving the top-k");
    search->add_option("--seed", search_opt.params.rng_seed, "seed-sample RNG");
    search_cfg.bind("mode", "--mode", search_opt.mode);
    search_cfg.bind("precision", "--precision", search_opt.precision);
    search_cfg.bind("runtag", "--runtag", search_opt.runtag);
    search_cfg.bind("k", "--k", search_opt.params.k);
    search_cfg.bind("initial_candidates", "--initial-candidates",
                    search_opt.params.initial_candidates);
    search_cfg.bind("n_candidates", "--n-candidates", search_opt.params.n_candidates);
    search_cfg.bind("max_iter", "--max-iter", search_opt.params.max_iter);
    search_cfg.bind("early_stop", "--early-stop", search_opt.params.early_stop);
    search_cfg.bind("seed", "--seed", search_opt.params.rng_seed);
    search->callback([&] {
        search_cfg.apply();
        run_search(search_opt);
    });

    TrainOptions train_opt;
    auto* train = app.add_subcommand("train-toy", "train the head + toy encoder on a dataset");
    ConfigBinder train_cfg(train);
    train->add_option("--dataset", train_opt.dataset, "JSONL training examples")->required();
    train->add_option("--out", train_opt.out, "output model file")->required();
    train->add_option("--loss-log", train_opt.loss_log, "optional per-step loss file");
    auto* dim_opt = train->add_option("--dim", train_opt.config.dim, "vector dim (default: data)");
    auto* vocab_opt =
        train->add_option("--vocab", train_opt.config.vocab, "vocab size (default: max token + 1)");
    train->add_option("--layers", train_opt.config.qnet_layers, "q-net hidden layers");
    train->add_option("--lr", train_opt.config.lr, "Adam learning rate");
    train->add_option("--steps", train_opt.config.steps, "training steps");
    train->add_option("--batch-size", train_opt.config.batch_size, "examples per step");
    train->add_option("--seed", train_opt.config.seed, "init + sampling seed");
    train->add_option("--margin-weight", train_opt.config.margin_weight, "margin loss weight");
    train->add_option("--ce-weight", train_opt.config.ce_weight, "in-batch CE weight");
    train_cfg.bind("dim", "--dim", train_opt.config.dim);
    train_cfg.bind("vocab", "--vocab", train_opt.config.vocab);
    train_cfg.bind("qnet_layers", "--layers", train_opt.config.qnet_layers);
    train_cfg.bind("lr", "--lr", train_opt.config.lr);
    train_cfg.bind("steps", "--steps", train_opt.config.steps);
    train_cfg.bind("batch_size", "--batch-size", train_opt.config.batch_size);
    train_cfg.bind("seed", "--seed", train_opt.config.seed);
    train_cfg.bind("margin_weight", "--margin-weight", train_opt.config.margin_weight);
    train_cfg.bind("ce_weight", "--ce-weight", train_opt.config.ce_weight);
    train->callback([&] {
        train_cfg.apply();
        train_opt.dim_given = dim_opt->count() > 0;
        train_opt.vocab_given = vocab_opt->count() > 0;
        run_train_toy(train_opt);
    });

    EvalOptions eval_opt;
    auto* evalcmd = app.add_subcommand("eval", "score a run against qrels");
    ConfigBinder eval_cfg(evalcmd);
    evalcmd->add_option("--run", eval_opt.run, "TREC run file")->required();
    evalcmd->add_option("--qrels", eval_opt.qrels, "qrels file")->required();
    evalcmd->add_option("--k", eval_opt.k, "ndcg/recall cutoff");
    evalcmd->add_option("--cutoff", eval_opt.cutoff, "reciprocal rank cutoff");
    evalcmd->add_flag("--per-query", eval_opt.per_query, "print per-query values");
    eval_cfg.bind("k", "--k", eval_opt.k);
    eval_cfg.bind("cutoff", "--cutoff", eval_opt.cutoff);
    evalcmd->callback([&] {
        eval_cfg.apply();
        run_eval(eval_opt);
    });

    DemoRadonOptions demo_opt;
    auto* demo = app.add_subcommand(
        "demo-radon", "partition a point set, certify linear impossibility, train a separator");
    ConfigBinder demo_cfg(demo);
    demo->add_option("--kind", demo_opt.kind, "xor | radon");
    demo->add_option("--dim", demo_opt.dim, "training vector dim");
    demo->add_option("--points-dim", demo_opt.points_dim, "geometry dim for --kind radon");
    demo->add_option("--steps", demo_opt.steps, "training steps");
    demo->add_option("--seed", demo_opt.seed, "seed");
    demo_cfg.bind("kind", "--kind", demo_opt.kind);
    demo_cfg.bind("dim", "--dim", demo_opt.dim);
    demo_cfg.bind("points_dim", "--points-dim", demo_opt.points_dim);
    demo_cfg.bind("steps", "--steps", demo_opt.steps);
    demo_cfg.bind("seed", "--seed", demo_opt.seed);
    demo->callback([&] {
        demo_cfg.apply();
        run_demo_radon(demo_opt);
    });

    DepthSweepOptions sweep_opt;
    auto* sweep = app.add_subcommand("depth-sweep", "train q-net depths 2,4,6,8 and tabulate");
    ConfigBinder sweep_cfg(sweep);
    sweep->add_option("--dim", sweep_opt.dim, "vector dim");
    sweep->add_option("--steps", sweep_opt.steps, "training steps per depth");
    sweep->add_option("--seed", sweep_opt.seed, "seed");
    sweep_cfg.bind("dim", "--dim", sweep_opt.dim);
    sweep_cfg.bind("steps", "--steps", sweep_opt.steps);
    sweep_cfg.bind("seed", "--seed", sweep_opt.seed);
    sweep->callback([&] {
        sweep_cfg.apply();
        run_depth_sweep(sweep_opt);
    });

    BenchOptions bench_opt;
    bench_opt.params.initial_candidates = 1000;
    bench_opt.params.n_candidates = 64;
    bench_opt.params.max_iter = 16;
    bench_opt.params.k = 10;
    auto* bench = app.add_subcommand("bench", "compare exhaustive and graph search timings");
    ConfigBinder bench_cfg(bench);
    bench->add_option("--n-docs", bench_opt.n_docs, "corpus size");
    bench->add_option("--dim", bench_opt.dim, "vector dim");
    bench->add_option("--clusters", bench_opt.n_clusters, "cluster count");
    bench->add_option("--graph-degree", bench_opt.graph_degree, "neighbors per doc");
    bench->add_option("--n-queries", bench_opt.n_queries, "random q-nets to run");
    bench->add_option("--qnet-layers", bench_opt.qnet_layers, "random q-net depth");
    bench->add_option("--k", bench_opt.params.k, "results per query");
    bench->add_option("--initial-candidates", bench_opt.params.initial_candidates,
                      "seed sample size");
    bench->add_option("--n-candidates", bench_opt.params.n_candidates, "frontier width");
    bench->add_option("--max-iter", bench_opt.params.max_iter, "iteration cap");
    bench->add_option("--seed", bench_opt.seed, "seed");
    bench_cfg.bind("n_docs", "--n-docs", bench_opt.n_docs);
    bench_cfg.bind("dim", "--dim", bench_opt.dim);
    bench_cfg.bind("clusters", "--clusters", bench_opt.n_clusters);
    bench_cfg.bind("graph_degree", "--graph-degree", bench_opt.graph_degree);
    bench_cfg.bind("n_queries", "--n-queries", bench_opt.n_queries);
    bench_cfg.bind("qnet_layers", "--qnet-layers", bench_opt.qnet_layers);
    bench_cfg.bind("k", "--k", bench_opt.params.k);
    bench_cfg.bind("initial_candidates", "--initial-candidates",
                   bench_opt.params.initial_candidates);
    bench_cfg.bind("n_candidates", "--n-candidates", bench_opt.params.n_candidates);
    bench_cfg.bind("max_iter", "--max-iter", bench_opt.params.max_iter);
    bench_cfg.bind("seed", "--seed", bench_opt.seed);
    bench->callback([&] {
        bench_cfg.apply();
        run_bench(bench_opt);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const ShapeError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
    return 0;
}
