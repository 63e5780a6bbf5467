#include <fstream>

#include <json.hpp>

#include "hyperscore/trainer.hpp"

// Dataset files are JSONL, one example per line:
//   {"query_tokens": [int], "positive": [h floats],
//    "negatives": [[h floats], ...], "teacher_scores": [1 + #negatives floats]}
// teacher_scores lists the positive's score first, then one per negative.

namespace hyperscore {

namespace {

using nlohmann::json;

[[noreturn]] void malformed(const std::string& path, int line_no, const std::string& why) {
    throw FormatError(FormatError::Code::malformed,
                      path + ":" + std::to_string(line_no) + ": " + why);
}

VecD to_vector(const json& arr) {
    VecD v(arr.size());
    Eigen::Index i = 0;
    for (const auto& x : arr) v[i++] = x.get<double>();
    return v;
}

}  // namespace

std::vector<TrainingExample> read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(FormatError::Code::malformed, "cannot open dataset: " + path);
    std::vector<TrainingExample> dataset;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            malformed(path, line_no, e.what());
        }
        try {
            TrainingExample ex;
            ex.query_tokens = record.at("query_tokens").get<std::vector<int>>();
            ex.positive = to_vector(record.at("positive"));
            if (ex.positive.size() == 0) malformed(path, line_no, "positive vector is empty");
            for (const auto& neg : record.at("negatives")) {
                ex.negatives.push_back(to_vector(neg));
                if (ex.negatives.back().size() != ex.positive.size())
                    malformed(path, line_no,
                              "negative has " + std::to_string(ex.negatives.back().size()) +
                                  " dims, positive has " + std::to_string(ex.positive.size()));
            }
            if (ex.negatives.empty()) malformed(path, line_no, "example has no negatives");
            VecD teacher = to_vector(record.at("teacher_scores"));
            if (teacher.size() != Eigen::Index(ex.negatives.size()) + 1)
                malformed(path, line_no,
                          "teacher_scores must hold 1 + #negatives values, got " +
                              std::to_string(teacher.size()));
            ex.teacher_pos = teacher[0];
            ex.teacher_negs = teacher.tail(teacher.size() - 1);
            dataset.push_back(std::move(ex));
        } catch (const json::exception& e) {
            malformed(path, line_no, e.what());
        }
    }
    return dataset;
}

void write_dataset(const std::vector<TrainingExample>& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError(FormatError::Code::malformed, "cannot open for writing: " + path);
    for (const auto& ex : dataset) {
        json record;
        record["query_tokens"] = ex.query_tokens;
        record["positive"] = std::vector<double>(ex.positive.data(), ex.positive.data() + ex.positive.size());
        json negs = json::array();
        for (const auto& neg : ex.negatives)
            negs.push_back(std::vector<double>(neg.data(), neg.data() + neg.size()));
        record["negatives"] = std::move(negs);
        std::vector<double> teacher{ex.teacher_pos};
        for (Eigen::Index j = 0; j < ex.teacher_negs.size(); ++j)
            teacher.push_back(ex.teacher_negs[j]);
        record["teacher_scores"] = std::move(teacher);
        out << record.dump() << '\n';
    }
    if (!out) throw FormatError(FormatError::Code::malformed, "write failed: " + path);
}

}  // namespace hyperscore
