#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace flaresim {

// Rank 1..4 tensor with an f32 payload, row-major with the last axis fastest.
// This is the on-disk interchange type; computation happens in double.
struct Tensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    Tensor() = default;
    Tensor(std::vector<std::uint32_t> d, std::vector<float> v)
        : dims(std::move(d)), data(std::move(v)) {}

    std::uint64_t element_count() const {
        std::uint64_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }

    static Tensor from_doubles(std::vector<std::uint32_t> dims, const std::vector<double>& v);
    std::vector<double> to_doubles() const;
};

// Binary dump: magic "FFTD", u8 version=1, u8 rank (1..4), rank little-endian
// u32 dims, then the f32 payload little-endian. Lossless round trip of shape
// and payload.
void dump_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

} // namespace flaresim
