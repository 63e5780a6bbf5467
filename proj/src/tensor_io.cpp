#include "hyperscore/tensor_io.hpp"

#include "hyperscore/io_util.hpp"

namespace hyperscore {

namespace {
constexpr char kMagic[5] = "HYPW";
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_tensors(const std::vector<TensorEntry>& tensors, const std::string& path) {
    auto out = ioutil::open_write(path);
    ioutil::write_bytes(out, kMagic, 4);
    ioutil::write_pod<std::uint32_t>(out, kVersion);
    ioutil::write_pod<std::uint32_t>(out, std::uint32_t(tensors.size()));
    for (const auto& e : tensors) {
        if (e.dtype > 1) throw ConfigError("tensor " + e.name + " has unknown dtype");
        if (e.payload.size() != e.element_count() * e.element_size())
            throw ConfigError("tensor " + e.name + " payload does not match dims");
        ioutil::write_string(out, e.name);
        ioutil::write_pod<std::uint8_t>(out, e.dtype);
        ioutil::write_pod<std::uint8_t>(out, std::uint8_t(e.dims.size()));
        for (auto d : e.dims) ioutil::write_pod<std::uint32_t>(out, d);
        ioutil::write_bytes(out, e.payload.data(), e.payload.size());
    }
}

std::vector<TensorEntry> load_tensors(const std::string& path) {
    auto in = ioutil::open_read(path);
    ioutil::expect_magic(in, kMagic, "HYPW");
    ioutil::expect_version(in, kVersion, "HYPW");
    const auto count = ioutil::read_pod<std::uint32_t>(in, "HYPW tensor count");
    std::vector<TensorEntry> tensors;
    tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        TensorEntry e;
        e.name = ioutil::read_string(in, "HYPW tensor name");
        e.dtype = ioutil::read_pod<std::uint8_t>(in, "HYPW dtype");
        if (e.dtype > 1)
            throw FormatError(FormatError::Code::malformed,
                              "tensor " + e.name + " has unknown dtype " + std::to_string(e.dtype));
        const auto rank = ioutil::read_pod<std::uint8_t>(in, "HYPW rank");
        e.dims.resize(rank);
        for (auto& d : e.dims) d = ioutil::read_pod<std::uint32_t>(in, "HYPW dim");
        e.payload.resize(e.element_count() * e.element_size());
        ioutil::read_bytes(in, e.payload.data(), e.payload.size(), "tensor " + e.name);
        tensors.push_back(std::move(e));
    }
    return tensors;
}

}  // namespace hyperscore
