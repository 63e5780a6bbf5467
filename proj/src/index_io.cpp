#include "hyperscore/index_io.hpp"

#include <unordered_set>

#include "hyperscore/io_util.hpp"

namespace hyperscore {

namespace {
constexpr char kMagic[5] = "HYPG";
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_index(const Corpus<float>& corpus, const DocGraph& graph, const std::string& path) {
    validate(corpus);
    const std::uint64_t n = corpus.size();
    if (n == 0) throw ConfigError("save_index: refusing to write an empty corpus");
    if (graph.neighbors.size() > 0 && graph.docs() != Eigen::Index(n))
        throw ShapeError("save_index: graph covers " + std::to_string(graph.docs()) +
                         " docs, corpus has " + std::to_string(n));
    auto out = ioutil::open_write(path);
    ioutil::write_bytes(out, kMagic, 4);
    ioutil::write_pod<std::uint32_t>(out, kVersion);
    ioutil::write_pod<std::uint32_t>(out, std::uint32_t(corpus.vectors.cols()));
    ioutil::write_pod<std::uint64_t>(out, n);
    ioutil::write_pod<std::uint32_t>(out, std::uint32_t(graph.degree()));
    ioutil::write_bytes(out, corpus.vectors.data(), sizeof(float) * corpus.vectors.size());
    if (graph.neighbors.size() > 0)
        ioutil::write_bytes(out, graph.neighbors.data(),
                            sizeof(std::uint32_t) * std::size_t(graph.neighbors.size()));
    for (const auto& id : corpus.doc_ids) ioutil::write_string(out, id);
}

std::pair<Corpus<float>, DocGraph> load_index(const std::string& path) {
    auto in = ioutil::open_read(path);
    ioutil::expect_magic(in, kMagic, "HYPG");
    ioutil::expect_version(in, kVersion, "HYPG");
    const auto h = ioutil::read_pod<std::uint32_t>(in, "HYPG h");
    const auto n = ioutil::read_pod<std::uint64_t>(in, "HYPG N");
    const auto g = ioutil::read_pod<std::uint32_t>(in, "HYPG G");
    if (n == 0 || h == 0)
        throw FormatError(FormatError::Code::malformed, "HYPG header has N=0 or h=0");

    Corpus<float> corpus;
    corpus.vectors.resize(Eigen::Index(n), Eigen::Index(h));
    ioutil::read_bytes(in, corpus.vectors.data(), sizeof(float) * corpus.vectors.size(),
                       "HYPG vectors");
    DocGraph graph;
    graph.neighbors.resize(Eigen::Index(n), Eigen::Index(g));
    if (g > 0)
        ioutil::read_bytes(in, graph.neighbors.data(),
                           sizeof(std::uint32_t) * std::size_t(graph.neighbors.size()),
                           "HYPG neighbors");
    corpus.doc_ids.reserve(n);
    std::unordered_set<std::string> seen;
    for (std::uint64_t i = 0; i < n; ++i) {
        corpus.doc_ids.push_back(ioutil::read_string(in, "HYPG doc id"));
        if (!seen.insert(corpus.doc_ids.back()).second)
            throw FormatError(FormatError::Code::malformed,
                              "HYPG duplicate doc id: " + corpus.doc_ids.back());
    }
    for (Eigen::Index i = 0; i < graph.neighbors.rows(); ++i)
        for (Eigen::Index j = 0; j < graph.neighbors.cols(); ++j)
            if (graph.neighbors(i, j) >= n)
                throw FormatError(FormatError::Code::malformed,
                                  "HYPG neighbor index out of range: " +
                                      std::to_string(graph.neighbors(i, j)));
    if (!all_finite(corpus.vectors))
        throw FormatError(FormatError::Code::malformed, "HYPG vectors contain non-finite values");
    return {std::move(corpus), std::move(graph)};
}

}  // namespace hyperscore
