#pragma once

#include <string>
#include <utility>

#include "hyperscore/index.hpp"

// On-disk index format, magic "HYPG":
//   u32 version (=1), u32 h, u64 N, u32 G,
//   N*h f32 vectors (row-major), N*G u32 neighbor indices (row-major),
//   N doc ids, each u16-length-prefixed UTF-8.
// G=0 stores a bare corpus without a graph.

namespace hyperscore {

void save_index(const Corpus<float>& corpus, const DocGraph& graph, const std::string& path);
std::pair<Corpus<float>, DocGraph> load_index(const std::string& path);

}  // namespace hyperscore
