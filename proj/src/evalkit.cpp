#include "hyperscore/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "hyperscore/common.hpp"

namespace hyperscore::eval {

namespace {

const std::map<std::string, int>* judgments_for(const Qrels& qrels, const std::string& qid) {
    auto it = qrels.find(qid);
    return it == qrels.end() ? nullptr : &it->second;
}

int grade_of(const std::map<std::string, int>* judgments, const std::string& doc_id) {
    if (!judgments) return 0;
    auto it = judgments->find(doc_id);
    return it == judgments->end() ? 0 : it->second;
}

void require_some_judgments(const Run& run, const Qrels& qrels) {
    for (const auto& [qid, entries] : run) {
        (void)entries;
        if (judgments_for(qrels, qid)) return;
    }
    throw ConfigError("qrels contain no judgments for any run query");
}

double discounted_gain(int grade, int rank) {
    return (std::exp2(double(grade)) - 1.0) / std::log2(double(rank) + 1.0);
}

void finish(MetricReport& report) {
    report.evaluated = int(report.per_query.size());
    double total = 0;
    for (const auto& [qid, value] : report.per_query) {
        (void)qid;
        total += value;
    }
    report.mean = report.evaluated ? total / report.evaluated : 0.0;
}

}  // namespace

MetricReport ndcg_at_k(const Run& run, const Qrels& qrels, int k) {
    if (k < 1) throw ConfigError("ndcg_at_k: k must be >= 1");
    require_some_judgments(run, qrels);
    MetricReport report;
    for (const auto& [qid, entries] : run) {
        const auto* judgments = judgments_for(qrels, qid);
        double dcg = 0;
        int rank = 0;
        for (const auto& entry : entries) {
            if (++rank > k) break;
            dcg += discounted_gain(grade_of(judgments, entry.doc_id), rank);
        }
        double ideal = 0;
        if (judgments) {
            std::vector<int> grades;
            for (const auto& [doc, grade] : *judgments) {
                (void)doc;
                grades.push_back(grade);
            }
            std::sort(grades.rbegin(), grades.rend());
            for (int rank_i = 1; rank_i <= k && rank_i <= int(grades.size()); ++rank_i)
                ideal += discounted_gain(grades[rank_i - 1], rank_i);
        }
        report.per_query[qid] = ideal > 0 ? dcg / ideal : 0.0;
    }
    finish(report);
    return report;
}

MetricReport reciprocal_rank(const Run& run, const Qrels& qrels, int cutoff) {
    if (cutoff < 1) throw ConfigError("reciprocal_rank: cutoff must be >= 1");
    require_some_judgments(run, qrels);
    MetricReport report;
    for (const auto& [qid, entries] : run) {
        const auto* judgments = judgments_for(qrels, qid);
        double rr = 0;
        int rank = 0;
        for (const auto& entry : entries) {
            if (++rank > cutoff) break;
            if (grade_of(judgments, entry.doc_id) >= 1) {
                rr = 1.0 / rank;
                break;
            }
        }
        report.per_query[qid] = rr;
    }
    finish(report);
    return report;
}

MetricReport recall_at_k(const Run& run, const Qrels& qrels, int k) {
    if (k < 1) throw ConfigError("recall_at_k: k must be >= 1");
    require_some_judgments(run, qrels);
    MetricReport report;
    for (const auto& [qid, entries] : run) {
        const auto* judgments = judgments_for(qrels, qid);
        int relevant = 0;
        if (judgments)
            for (const auto& [doc, grade] : *judgments) {
                (void)doc;
                if (grade >= 1) ++relevant;
            }
        if (relevant == 0) {
            report.skipped.push_back(qid);
            continue;
        }
        int hit = 0;
        int rank = 0;
        for (const auto& entry : entries) {
            if (++rank > k) break;
            if (grade_of(judgments, entry.doc_id) >= 1) ++hit;
        }
        report.per_query[qid] = double(hit) / relevant;
    }
    finish(report);
    return report;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> fields;
    std::string field;
    while (in >> field) fields.push_back(field);
    return fields;
}

[[noreturn]] void malformed(const std::string& path, int line_no, const std::string& why) {
    throw FormatError(FormatError::Code::malformed,
                      path + ":" + std::to_string(line_no) + ": " + why);
}

}  // namespace

Run read_run(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(FormatError::Code::malformed, "cannot open run file: " + path);
    Run run;
    std::map<std::string, std::set<std::string>> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() != 6)
            malformed(path, line_no,
                      "expected 6 fields 'qid Q0 docid rank score runtag', got " +
                          std::to_string(fields.size()));
        if (fields[1] != "Q0") malformed(path, line_no, "second field must be Q0");
        double score = 0;
        try {
            std::size_t used = 0;
            score = std::stod(fields[4], &used);
            if (used != fields[4].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            malformed(path, line_no, "bad score: " + fields[4]);
        }
        if (!seen[fields[0]].insert(fields[2]).second)
            malformed(path, line_no, "duplicate doc " + fields[2] + " for query " + fields[0]);
        run[fields[0]].push_back({fields[2], score});
    }
    for (auto& [qid, entries] : run) {
        (void)qid;
        std::sort(entries.begin(), entries.end(), [](const RunEntry& a, const RunEntry& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.doc_id < b.doc_id;
        });
    }
    return run;
}

void write_run(const Run& run, const std::string& runtag, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError(FormatError::Code::malformed, "cannot open for writing: " + path);
    char score_buf[64];
    for (const auto& [qid, entries] : run) {
        auto sorted = entries;
        std::sort(sorted.begin(), sorted.end(), [](const RunEntry& a, const RunEntry& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.doc_id < b.doc_id;
        });
        int rank = 0;
        for (const auto& entry : sorted) {
            std::snprintf(score_buf, sizeof(score_buf), "%.6f", entry.score);
            out << qid << " Q0 " << entry.doc_id << ' ' << ++rank << ' ' << score_buf << ' '
                << runtag << '\n';
        }
    }
    if (!out) throw FormatError(FormatError::Code::malformed, "write failed: " + path);
}

Qrels read_qrels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(FormatError::Code::malformed, "cannot open qrels file: " + path);
    Qrels qrels;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() != 4)
            malformed(path, line_no, "expected 4 fields 'qid 0 docid grade', got " +
                                         std::to_string(fields.size()));
        int grade = 0;
        try {
            std::size_t used = 0;
            grade = std::stoi(fields[3], &used);
            if (used != fields[3].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            malformed(path, line_no, "bad grade: " + fields[3]);
        }
        if (grade < 0) malformed(path, line_no, "negative grade");
        qrels[fields[0]][fields[2]] = grade;
    }
    return qrels;
}

}  // namespace hyperscore::eval
