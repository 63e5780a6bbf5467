#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "hyperscore/evalkit.hpp"
#include "hyperscore/rng.hpp"

using namespace hyperscore;
using eval::MetricReport;
using eval::Qrels;
using eval::Run;

namespace {

Run ranked_run(const std::string& qid, const std::vector<std::string>& ids) {
    Run run;
    double score = double(ids.size());
    for (const auto& id : ids) run[qid].push_back({id, score--});
    return run;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("perfect rankings score 1.0 on every metric") {
    Run run = ranked_run("q1", {"a", "b", "c", "d"});
    Qrels qrels{{"q1", {{"a", 3}, {"b", 2}, {"c", 1}}}};
    CHECK(eval::ndcg_at_k(run, qrels, 10).mean == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eval::reciprocal_rank(run, qrels, 10).mean == 1.0);
    CHECK(eval::recall_at_k(run, qrels, 3).mean == 1.0);
}

TEST_CASE("single relevant doc at rank 2 gives ndcg 1/log2(3)") {
    Run run = ranked_run("q1", {"miss", "hit", "other"});
    Qrels qrels{{"q1", {{"hit", 1}}}};
    MetricReport report = eval::ndcg_at_k(run, qrels, 10);
    CHECK(report.mean == doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-12));
    CHECK(report.mean == doctest::Approx(0.63092975357).epsilon(1e-9));
}

TEST_CASE("graded ndcg matches the hand formula") {
    // ranked: [rel1, rel3]; ideal: [rel3, rel1]
    Run run = ranked_run("q1", {"lo", "hi"});
    Qrels qrels{{"q1", {{"hi", 3}, {"lo", 1}}}};
    const double dcg = 1.0 / std::log2(2.0) + 7.0 / std::log2(3.0);
    const double ideal = 7.0 / std::log2(2.0) + 1.0 / std::log2(3.0);
    MetricReport report = eval::ndcg_at_k(run, qrels, 10);
    CHECK(report.mean == doctest::Approx(dcg / ideal).epsilon(1e-9));
}

TEST_CASE("ndcg honors the cutoff") {
    Run run = ranked_run("q1", {"x", "y", "hit"});
    Qrels qrels{{"q1", {{"hit", 2}}}};
    CHECK(eval::ndcg_at_k(run, qrels, 2).mean == 0.0);
    CHECK(eval::ndcg_at_k(run, qrels, 3).mean > 0.0);
}

TEST_CASE("reciprocal rank fixtures") {
    Qrels qrels{{"q1", {{"hit", 1}}}};
    CHECK(eval::reciprocal_rank(ranked_run("q1", {"a", "b", "c", "hit"}), qrels, 10).mean == 0.25);
    CHECK(eval::reciprocal_rank(ranked_run("q1", {"a", "b"}), qrels, 10).mean == 0.0);
    CHECK(eval::reciprocal_rank(ranked_run("q1", {"hit", "a"}), qrels, 10).mean == 1.0);
    // cutoff excludes the hit
    CHECK(eval::reciprocal_rank(ranked_run("q1", {"a", "b", "c", "hit"}), qrels, 3).mean == 0.0);
}

TEST_CASE("recall fixtures and skip reporting") {
    Qrels qrels{{"q1", {{"a", 1}, {"b", 1}, {"c", 1}, {"d", 1}}},
                {"q2", {{"e", 2}}},
                {"q3", {{"nope", 0}}}};
    Run run;
    run["q1"] = ranked_run("q1", {"a", "b", "x", "y"})["q1"];  // 2 of 4 in top 2
    run["q2"] = ranked_run("q2", {"e"})["q2"];
    run["q3"] = ranked_run("q3", {"nope"})["q3"];  // graded 0: no relevant docs
    MetricReport report = eval::recall_at_k(run, qrels, 2);
    CHECK(report.per_query.at("q1") == 0.5);
    CHECK(report.per_query.at("q2") == 1.0);
    CHECK(report.evaluated == 2);
    CHECK(report.mean == doctest::Approx(0.75).epsilon(1e-12));
    REQUIRE(report.skipped.size() == 1);
    CHECK(report.skipped[0] == "q3");
}

TEST_CASE("three-query mean averages per-query values") {
    Qrels qrels{{"q1", {{"a", 1}}}, {"q2", {{"b", 1}}}, {"q3", {{"c", 1}}}};
    Run run;
    run["q1"] = ranked_run("q1", {"a"})["q1"];           // rr 1
    run["q2"] = ranked_run("q2", {"x", "b"})["q2"];      // rr 1/2
    run["q3"] = ranked_run("q3", {"x", "y", "c"})["q3"]; // rr 1/3
    MetricReport report = eval::reciprocal_rank(run, qrels, 10);
    CHECK(report.evaluated == 3);
    CHECK(report.mean == doctest::Approx((1.0 + 0.5 + 1.0 / 3.0) / 3.0).epsilon(1e-12));
}

TEST_CASE("metrics stay in the unit interval on random runs") {
    Rng rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        Run run;
        Qrels qrels;
        for (int q = 0; q < 4; ++q) {
            std::string qid = "q" + std::to_string(q);
            std::vector<std::pair<std::string, double>> docs;
            for (int d = 0; d < 12; ++d) {
                std::string id = "d" + std::to_string(d);
                docs.emplace_back(id, rng.gaussian());
                if (rng.uniform() < 0.3) qrels[qid][id] = 1 + int(rng.bounded(3));
            }
            std::sort(docs.begin(), docs.end(),
                      [](const auto& a, const auto& b) { return a.second > b.second; });
            for (auto& [id, s] : docs) run[qid].push_back({id, s});
        }
        for (auto metric : {eval::ndcg_at_k, eval::recall_at_k}) {
            MetricReport report = metric(run, qrels, 5);
            CHECK(report.mean >= 0.0);
            CHECK(report.mean <= 1.0);
            for (const auto& [qid, value] : report.per_query) {
                CHECK(value >= 0.0);
                CHECK(value <= 1.0);
            }
        }
        MetricReport rr = eval::reciprocal_rank(run, qrels, 5);
        CHECK(rr.mean >= 0.0);
        CHECK(rr.mean <= 1.0);
    }
}

TEST_CASE("permuting docs below the cutoff never changes ndcg or recall") {
    Qrels qrels{{"q1", {{"a", 2}, {"b", 1}}}};
    Run base = ranked_run("q1", {"a", "b", "c", "d", "e"});
    Run swapped = ranked_run("q1", {"a", "b", "e", "d", "c"});
    CHECK(eval::ndcg_at_k(base, qrels, 2).mean == eval::ndcg_at_k(swapped, qrels, 2).mean);
    CHECK(eval::recall_at_k(base, qrels, 2).mean == eval::recall_at_k(swapped, qrels, 2).mean);
}

TEST_CASE("ndcg is invariant to positive affine score changes") {
    Qrels qrels{{"q1", {{"a", 2}, {"c", 1}}}};
    Run run;
    run["q1"] = {{"b", 9.0}, {"a", 5.0}, {"c", 1.0}};
    Run rescaled;
    for (const auto& entry : run["q1"]) rescaled["q1"].push_back({entry.doc_id, 3.0 * entry.score + 7.0});
    CHECK(eval::ndcg_at_k(run, qrels, 3).mean ==
          doctest::Approx(eval::ndcg_at_k(rescaled, qrels, 3).mean).epsilon(1e-15));
}

TEST_CASE("moving a relevant doc up never hurts ndcg") {
    Qrels qrels{{"q1", {{"hit", 1}}}};
    double prev = 0;
    for (int pos = 5; pos >= 0; --pos) {
        std::vector<std::string> ids{"a", "b", "c", "d", "e"};
        ids.insert(ids.begin() + pos, "hit");
        double val = eval::ndcg_at_k(ranked_run("q1", ids), qrels, 10).mean;
        CHECK(val >= prev);
        prev = val;
    }
    CHECK(prev == 1.0);
}

TEST_CASE("run files round-trip through write and read") {
    Run run;
    run["q2"] = {{"beta", 1.25}, {"alpha", 0.5}};
    run["q10"] = {{"delta", -3.0}, {"gamma", 10.0 / 3.0}};
    const auto path = temp_file("hyperscore_run_roundtrip.run");
    eval::write_run(run, "hyperscore", path.string());
    Run loaded = eval::read_run(path.string());
    REQUIRE(loaded.size() == 2);
    REQUIRE(loaded.count("q2") == 1);
    REQUIRE(loaded.count("q10") == 1);
    CHECK(loaded["q2"][0].doc_id == "beta");
    CHECK(loaded["q2"][1].doc_id == "alpha");
    CHECK(loaded["q10"][0].doc_id == "gamma");
    CHECK(loaded["q10"][1].doc_id == "delta");
    // scores survive at 6-decimal precision
    CHECK(loaded["q10"][0].score == doctest::Approx(10.0 / 3.0).epsilon(1e-6));

    // writing the loaded run reproduces the file byte for byte
    const auto path2 = temp_file("hyperscore_run_roundtrip2.run");
    eval::write_run(loaded, "hyperscore", path2.string());
    CHECK(slurp(path) == slurp(path2));
    std::filesystem::remove(path);
    std::filesystem::remove(path2);
}

TEST_CASE("written runs carry regenerated 1-based ranks") {
    Run run;
    run["q1"] = {{"low", 1.0}, {"high", 2.0}};  // intentionally unsorted
    const auto path = temp_file("hyperscore_run_ranks.run");
    eval::write_run(run, "tag", path.string());
    std::ifstream in(path);
    std::string qid, q0, doc, rank, score, tag;
    in >> qid >> q0 >> doc >> rank >> score >> tag;
    CHECK(qid == "q1");
    CHECK(q0 == "Q0");
    CHECK(doc == "high");
    CHECK(rank == "1");
    CHECK(score == "2.000000");
    CHECK(tag == "tag");
    in >> qid >> q0 >> doc >> rank >> score >> tag;
    CHECK(doc == "low");
    CHECK(rank == "2");
    std::filesystem::remove(path);
}

TEST_CASE("malformed run lines name the offending line") {
    const auto path = temp_file("hyperscore_bad.run");
    {
        std::ofstream out(path);
        out << "q1 Q0 doc1 1 0.5 tag\n";
        out << "q1 Q0 doc2 2 0.25\n";  // five fields
    }
    try {
        eval::read_run(path.string());
        FAIL("five-field line accepted");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }

    {
        std::ofstream out(path);
        out << "q1 ZZ doc1 1 0.5 tag\n";  // bad literal
    }
    CHECK_THROWS_AS(eval::read_run(path.string()), FormatError);

    {
        std::ofstream out(path);
        out << "q1 Q0 doc1 1 notanumber tag\n";
    }
    CHECK_THROWS_AS(eval::read_run(path.string()), FormatError);

    {
        std::ofstream out(path);
        out << "q1 Q0 doc1 1 0.5 tag\n";
        out << "q1 Q0 doc1 2 0.25 tag\n";  // duplicate doc for the query
    }
    CHECK_THROWS_AS(eval::read_run(path.string()), FormatError);
    std::filesystem::remove(path);
}

TEST_CASE("qrels parse and reject negative grades") {
    const auto path = temp_file("hyperscore_test.qrels");
    {
        std::ofstream out(path);
        out << "q1 0 docA 2\n";
        out << "q1 0 docB 0\n";
        out << "q2 0 docC 1\n";
    }
    Qrels qrels = eval::read_qrels(path.string());
    CHECK(qrels.at("q1").at("docA") == 2);
    CHECK(qrels.at("q1").at("docB") == 0);
    CHECK(qrels.at("q2").at("docC") == 1);

    {
        std::ofstream out(path);
        out << "q1 0 docA -1\n";
    }
    CHECK_THROWS_AS(eval::read_qrels(path.string()), FormatError);
    std::filesystem::remove(path);
}

TEST_CASE("a run with no judged queries is a config error") {
    Run run = ranked_run("q9", {"a"});
    Qrels qrels{{"q1", {{"a", 1}}}};
    CHECK_THROWS_AS(eval::ndcg_at_k(run, qrels, 5), ConfigError);
    CHECK_THROWS_AS(eval::reciprocal_rank(run, qrels, 5), ConfigError);
    CHECK_THROWS_AS(eval::recall_at_k(run, qrels, 5), ConfigError);
}

TEST_CASE("judged-elsewhere queries still count as zero") {
    // q1 is judged, q2 appears in qrels only for other docs: still evaluated
    Run run;
    run["q1"] = ranked_run("q1", {"a"})["q1"];
    run["q2"] = ranked_run("q2", {"zzz"})["q2"];
    Qrels qrels{{"q1", {{"a", 1}}}, {"q2", {{"b", 1}}}};
    MetricReport report = eval::ndcg_at_k(run, qrels, 5);
    CHECK(report.evaluated == 2);
    CHECK(report.per_query.at("q1") == doctest::Approx(1.0));
    CHECK(report.per_query.at("q2") == 0.0);
    CHECK(report.mean == doctest::Approx(0.5));
}
