#pragma once

#include <map>
#include <string>
#include <vector>

// Retrieval metrics over TREC-style runs and qrels. Metrics iterate the run's
// queries and look up judgments; a query the qrels never mention counts as
// zero for ndcg and reciprocal rank and is skipped (and reported) for recall.

namespace hyperscore::eval {

struct RunEntry {
    std::string doc_id;
    double score = 0;
};

/// qid -> ranked entries, best first; readers sort by (score desc, id asc).
using Run = std::map<std::string, std::vector<RunEntry>>;

/// qid -> doc_id -> relevance grade (>= 0).
using Qrels = std::map<std::string, std::map<std::string, int>>;

struct MetricReport {
    std::map<std::string, double> per_query;
    double mean = 0;
    int evaluated = 0;
    std::vector<std::string> skipped;  // queries with zero relevant docs (recall only)
};

/// Graded nDCG: gain 2^rel - 1, discount 1/log2(rank + 1), ideal from the
/// query's full judgment list. Queries with no relevant docs score 0.
MetricReport ndcg_at_k(const Run& run, const Qrels& qrels, int k);

/// 1/rank of the first doc with grade >= 1 within `cutoff`, else 0.
MetricReport reciprocal_rank(const Run& run, const Qrels& qrels, int cutoff);

/// |relevant docs in top k| / |relevant docs|; zero-relevant queries are
/// excluded from the mean and listed in `skipped`.
MetricReport recall_at_k(const Run& run, const Qrels& qrels, int k);

/// Lines "qid Q0 docid rank score runtag". Ranks in the file are ignored;
/// entries re-sort by (score desc, doc_id asc).
Run read_run(const std::string& path);

/// Writes with regenerated 1-based ranks and 6-decimal scores.
void write_run(const Run& run, const std::string& runtag, const std::string& path);

/// Lines "qid 0 docid grade".
Qrels read_qrels(const std::string& path);

}  // namespace hyperscore::eval
