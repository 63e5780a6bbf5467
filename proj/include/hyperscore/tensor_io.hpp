#pragma once

#include <cstdint>
#include <cstring>
#include <numeric>
#include <string>
#include <vector>

#include "hyperscore/common.hpp"

// Named-tensor container, magic "HYPW":
//   u32 version (=1), u32 tensor_count, then per tensor
//   {u16 name_len, name, u8 dtype (0=f32, 1=f64), u8 rank, rank*u32 dims,
//    little-endian payload}.

namespace hyperscore {

struct TensorEntry {
    std::string name;
    std::uint8_t dtype = 1;  // 0=f32, 1=f64
    std::vector<std::uint32_t> dims;
    std::vector<char> payload;

    std::size_t element_count() const {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
    std::size_t element_size() const { return dtype == 0 ? 4 : 8; }
};

void save_tensors(const std::vector<TensorEntry>& tensors, const std::string& path);
std::vector<TensorEntry> load_tensors(const std::string& path);

namespace detail {

template <class Scalar>
constexpr std::uint8_t dtype_of() {
    static_assert(std::is_same_v<Scalar, float> || std::is_same_v<Scalar, double>);
    return std::is_same_v<Scalar, float> ? 0 : 1;
}

template <class Scalar>
void copy_payload_out(const Scalar* src, std::size_t n, TensorEntry& e) {
    e.dtype = dtype_of<Scalar>();
    e.payload.resize(n * sizeof(Scalar));
    std::memcpy(e.payload.data(), src, e.payload.size());
}

/// Reads entry elements as Scalar, converting between f32/f64 when needed.
template <class Scalar>
std::vector<Scalar> payload_as(const TensorEntry& e) {
    const std::size_t n = e.element_count();
    if (e.payload.size() != n * e.element_size())
        throw FormatError(FormatError::Code::malformed,
                          "tensor " + e.name + " payload size mismatch");
    std::vector<Scalar> out(n);
    if (e.dtype == 0) {
        std::vector<float> raw(n);
        std::memcpy(raw.data(), e.payload.data(), e.payload.size());
        for (std::size_t i = 0; i < n; ++i) out[i] = Scalar(raw[i]);
    } else {
        std::vector<double> raw(n);
        std::memcpy(raw.data(), e.payload.data(), e.payload.size());
        for (std::size_t i = 0; i < n; ++i) out[i] = Scalar(raw[i]);
    }
    return out;
}

}  // namespace detail

template <class Scalar>
TensorEntry make_entry(const std::string& name, const Mat<Scalar>& m) {
    TensorEntry e;
    e.name = name;
    e.dims = {std::uint32_t(m.rows()), std::uint32_t(m.cols())};
    detail::copy_payload_out(m.data(), std::size_t(m.size()), e);
    return e;
}

template <class Scalar>
TensorEntry make_entry(const std::string& name, const Vec<Scalar>& v) {
    TensorEntry e;
    e.name = name;
    e.dims = {std::uint32_t(v.size())};
    detail::copy_payload_out(v.data(), std::size_t(v.size()), e);
    return e;
}

inline TensorEntry make_scalar_entry(const std::string& name, double value) {
    TensorEntry e;
    e.name = name;
    e.dims = {1};
    detail::copy_payload_out(&value, 1, e);
    return e;
}

template <class Scalar>
Mat<Scalar> entry_as_matrix(const TensorEntry& e) {
    if (e.dims.size() != 2)
        throw FormatError(FormatError::Code::malformed,
                          "tensor " + e.name + " has rank " + std::to_string(e.dims.size()) +
                              ", expected 2");
    auto data = detail::payload_as<Scalar>(e);
    Mat<Scalar> m(e.dims[0], e.dims[1]);
    std::memcpy(m.data(), data.data(), data.size() * sizeof(Scalar));
    return m;
}

template <class Scalar>
Vec<Scalar> entry_as_vector(const TensorEntry& e) {
    if (e.dims.size() != 1)
        throw FormatError(FormatError::Code::malformed,
                          "tensor " + e.name + " has rank " + std::to_string(e.dims.size()) +
                              ", expected 1");
    auto data = detail::payload_as<Scalar>(e);
    Vec<Scalar> v(e.dims[0]);
    std::memcpy(v.data(), data.data(), data.size() * sizeof(Scalar));
    return v;
}

inline double entry_as_scalar(const TensorEntry& e) {
    auto data = detail::payload_as<double>(e);
    if (data.size() != 1)
        throw FormatError(FormatError::Code::malformed,
                          "tensor " + e.name + " holds " + std::to_string(data.size()) +
                              " elements, expected 1");
    return data[0];
}

}  // namespace hyperscore
