#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "hyperscore/tensor_io.hpp"
#include "hyperscore/trainer.hpp"

using namespace hyperscore;
using testutil::random_mat;
using testutil::random_vec;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

void clobber(const std::filesystem::path& path, std::streamoff pos, char byte) {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(pos);
    f.put(byte);
}

}  // namespace

TEST_CASE("tensor files round-trip f32 and f64 payloads bit-exactly") {
    Rng rng(51);
    for (int trial = 0; trial < 20; ++trial) {
        const int r = 1 + int(rng.bounded(6));
        const int c = 1 + int(rng.bounded(6));
        MatD md = random_mat(rng, r, c);
        MatF mf = random_mat(rng, r, c).cast<float>();
        VecD vd = random_vec(rng, c);
        std::vector<TensorEntry> tensors{
            make_entry("layer.w", md),
            make_entry("layer.w32", mf),
            make_entry("layer.b", vd),
            make_scalar_entry("meta.eps", 1e-5),
        };
        const auto path = temp_file("hyperscore_tensors.hypw");
        save_tensors(tensors, path.string());
        auto loaded = load_tensors(path.string());
        REQUIRE(loaded.size() == 4);
        CHECK(loaded[0].name == "layer.w");
        CHECK(entry_as_matrix<double>(loaded[0]) == md);
        CHECK(loaded[1].dtype == 0);
        CHECK(entry_as_matrix<float>(loaded[1]) == mf);
        CHECK(entry_as_vector<double>(loaded[2]) == vd);
        CHECK(entry_as_scalar(loaded[3]) == 1e-5);
        CHECK(loaded[0].payload == tensors[0].payload);
        CHECK(loaded[1].payload == tensors[1].payload);
        std::filesystem::remove(path);
    }
}

TEST_CASE("dtype conversion widens f32 payloads on request") {
    MatF mf(2, 2);
    mf << 0.5f, -1.25f, 3.0f, 0.0f;
    TensorEntry e = make_entry("m", mf);
    MatD widened = entry_as_matrix<double>(e);
    CHECK(widened(0, 0) == 0.5);
    CHECK(widened(0, 1) == -1.25);
    CHECK(widened(1, 0) == 3.0);
    CHECK(widened(1, 1) == 0.0);
}

TEST_CASE("rank mismatches are format errors") {
    Rng rng(3);
    VecD v = random_vec(rng, 4);
    TensorEntry e = make_entry("v", v);
    CHECK_THROWS_AS(entry_as_matrix<double>(e), FormatError);
    MatD m = random_mat(rng, 2, 2);
    TensorEntry me = make_entry("m", m);
    CHECK_THROWS_AS(entry_as_vector<double>(me), FormatError);
    CHECK_THROWS_AS(entry_as_scalar(me), FormatError);
}

TEST_CASE("corrupted tensor files raise distinct format errors") {
    Rng rng(4);
    std::vector<TensorEntry> tensors{make_entry("w", random_mat(rng, 3, 3))};
    const auto path = temp_file("hyperscore_corrupt.hypw");

    save_tensors(tensors, path.string());
    clobber(path, 1, 'X');
    try {
        load_tensors(path.string());
        FAIL("bad magic accepted");
    } catch (const FormatError& e) {
        CHECK(e.code() == FormatError::Code::bad_magic);
    }

    save_tensors(tensors, path.string());
    clobber(path, 4, 42);
    try {
        load_tensors(path.string());
        FAIL("bad version accepted");
    } catch (const FormatError& e) {
        CHECK(e.code() == FormatError::Code::bad_version);
    }

    save_tensors(tensors, path.string());
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 7);
    try {
        load_tensors(path.string());
        FAIL("truncated file accepted");
    } catch (const FormatError& e) {
        CHECK(e.code() == FormatError::Code::truncated);
    }
    std::filesystem::remove(path);
}

TEST_CASE("saved models reload with bit-identical tensors and scores") {
    TrainConfig config;
    config.dim = 8;
    config.qnet_layers = 2;
    config.vocab = 12;
    config.seed = 77;
    ToyModel model = init_toy_model(config);
    const auto path = temp_file("hyperscore_model.hypw");
    save_model(model, path.string());
    ToyModel loaded = load_model(path.string());

    CHECK(loaded.encoder.vocab_size == model.encoder.vocab_size);
    CHECK(loaded.encoder.dim == model.encoder.dim);
    CHECK(loaded.eps == model.eps);
    CHECK(loaded.encoder.embedding == model.encoder.embedding);
    REQUIRE(loaded.head.layers.size() == model.head.layers.size());

    std::vector<std::pair<std::string, const double*>> a, b;
    std::vector<Eigen::Index> sizes;
    visit_model(model, [&](const std::string& name, const auto& t) {
        a.emplace_back(name, t.data());
        sizes.push_back(t.size());
    });
    visit_model(loaded, [&](const std::string& name, const auto& t) { b.emplace_back(name, t.data()); });
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].first == b[i].first);
        for (Eigen::Index j = 0; j < sizes[i]; ++j) CHECK(a[i].second[j] == b[i].second[j]);
    }

    // end to end: identical qnets, identical scores
    Rng rng(5);
    std::vector<int> tokens{1, 4, 7};
    VecD doc = random_vec(rng, config.dim);
    QNet<double> qa = build_qnet(model.encoder.encode(tokens), model.head, model.eps);
    QNet<double> qb = build_qnet(loaded.encoder.encode(tokens), loaded.head, loaded.eps);
    CHECK(score(qa, doc) == score(qb, doc));
    std::filesystem::remove(path);
}

TEST_CASE("model files missing a tensor are rejected") {
    TrainConfig config;
    config.dim = 4;
    config.qnet_layers = 1;
    config.vocab = 6;
    ToyModel model = init_toy_model(config);
    const auto path = temp_file("hyperscore_model_missing.hypw");
    save_model(model, path.string());
    auto tensors = load_tensors(path.string());
    tensors.erase(tensors.begin());  // drop the first head tensor
    save_tensors(tensors, path.string());
    CHECK_THROWS_AS(load_model(path.string()), FormatError);
    std::filesystem::remove(path);
}

TEST_CASE("datasets round-trip through jsonl") {
    Rng rng(6);
    std::vector<TrainingExample> dataset;
    for (int i = 0; i < 5; ++i) {
        TrainingExample ex;
        ex.query_tokens = {int(rng.bounded(10)), int(rng.bounded(10))};
        ex.positive = random_vec(rng, 4);
        const int negs = 1 + int(rng.bounded(3));
        for (int j = 0; j < negs; ++j) ex.negatives.push_back(random_vec(rng, 4));
        ex.teacher_pos = rng.gaussian();
        ex.teacher_negs = random_vec(rng, negs);
        dataset.push_back(std::move(ex));
    }
    const auto path = temp_file("hyperscore_dataset.jsonl");
    write_dataset(dataset, path.string());
    auto loaded = read_dataset(path.string());
    REQUIRE(loaded.size() == dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        CHECK(loaded[i].query_tokens == dataset[i].query_tokens);
        CHECK(loaded[i].positive == dataset[i].positive);
        REQUIRE(loaded[i].negatives.size() == dataset[i].negatives.size());
        for (std::size_t j = 0; j < dataset[i].negatives.size(); ++j)
            CHECK(loaded[i].negatives[j] == dataset[i].negatives[j]);
        CHECK(loaded[i].teacher_pos == dataset[i].teacher_pos);
        CHECK(loaded[i].teacher_negs == dataset[i].teacher_negs);
    }
    std::filesystem::remove(path);
}

TEST_CASE("malformed dataset lines report their line number") {
    const auto path = temp_file("hyperscore_bad_dataset.jsonl");
    {
        std::ofstream out(path);
        out << R"({"query_tokens":[0],"positive":[1.0],"negatives":[[0.5]],"teacher_scores":[1.0,0.0]})"
            << "\n";
        out << "{not json}\n";
    }
    try {
        read_dataset(path.string());
        FAIL("bad json accepted");
    } catch (const FormatError& e) {
        CHECK(e.code() == FormatError::Code::malformed);
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }

    {
        std::ofstream out(path);
        // teacher_scores must hold 1 + #negatives values
        out << R"({"query_tokens":[0],"positive":[1.0],"negatives":[[0.5]],"teacher_scores":[1.0]})"
            << "\n";
    }
    CHECK_THROWS_AS(read_dataset(path.string()), FormatError);

    {
        std::ofstream out(path);
        // negative vector dimension differs from the positive
        out << R"({"query_tokens":[0],"positive":[1.0,2.0],"negatives":[[0.5]],"teacher_scores":[1.0,0.0]})"
            << "\n";
    }
    CHECK_THROWS_AS(read_dataset(path.string()), FormatError);
    std::filesystem::remove(path);
}
