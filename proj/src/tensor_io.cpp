#include "flaresim/tensor_io.hpp"

#include "flaresim/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

namespace flaresim {
namespace {

static_assert(std::endian::native == std::endian::little,
              "tensor dump I/O assumes a little-endian host");
static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

constexpr char kMagic[4] = {'F', 'F', 'T', 'D'};
constexpr std::uint8_t kVersion = 1;

void validate_dims(const std::vector<std::uint32_t>& dims) {
    if (dims.empty() || dims.size() > 4)
        throw DataError("tensor rank must be between 1 and 4");
    std::uint64_t n = 1;
    for (auto d : dims) {
        if (d == 0) throw DataError("tensor dims must be nonzero");
        n *= d;
        if (n > (1ULL << 32)) throw DataError("tensor shape overflow");
    }
}

} // namespace

Tensor Tensor::from_doubles(std::vector<std::uint32_t> dims, const std::vector<double>& v) {
    Tensor t;
    t.dims = std::move(dims);
    t.data.reserve(v.size());
    for (double x : v) t.data.push_back(static_cast<float>(x));
    return t;
}

std::vector<double> Tensor::to_doubles() const {
    return std::vector<double>(data.begin(), data.end());
}

void dump_tensor(const std::filesystem::path& path, const Tensor& t) {
    validate_dims(t.dims);
    if (t.element_count() != t.data.size())
        throw DataError("tensor payload size does not match dims");

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open for writing: " + path.string());
    f.write(kMagic, 4);
    f.put(static_cast<char>(kVersion));
    f.put(static_cast<char>(t.dims.size()));
    f.write(reinterpret_cast<const char*>(t.dims.data()),
            static_cast<std::streamsize>(t.dims.size() * sizeof(std::uint32_t)));
    f.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!f) throw DataError("write failed: " + path.string());
}

Tensor load_tensor(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path.string());

    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("bad magic in tensor dump: " + path.string());

    const int version = f.get();
    if (version != kVersion)
        throw DataError("unsupported tensor dump version in " + path.string());
    const int rank = f.get();
    if (rank < 1 || rank > 4)
        throw DataError("tensor rank out of range in " + path.string());

    Tensor t;
    t.dims.resize(static_cast<std::size_t>(rank));
    f.read(reinterpret_cast<char*>(t.dims.data()),
           static_cast<std::streamsize>(t.dims.size() * sizeof(std::uint32_t)));
    if (!f) throw DataError("truncated tensor dump: " + path.string());
    validate_dims(t.dims);

    t.data.resize(t.element_count());
    f.read(reinterpret_cast<char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!f || f.gcount() != static_cast<std::streamsize>(t.data.size() * sizeof(float)))
        throw DataError("truncated tensor dump: " + path.string());
    return t;
}

} // namespace flaresim
