#include "checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <vector>

namespace stcae {

namespace {

constexpr char kMagic[6] = {'S', 'T', 'C', 'A', 'E', '1'};

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

void put_u32(std::FILE* f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    check(std::fwrite(b, 1, 4, f) == 4, ErrorKind::io, "checkpoint write failed");
}

std::uint32_t get_u32(std::FILE* f) {
    unsigned char b[4];
    check(std::fread(b, 1, 4, f) == 4, ErrorKind::checkpoint, "checkpoint truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_floats(std::FILE* f, const float* data, std::int64_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        check(std::fwrite(data, sizeof(float), static_cast<std::size_t>(n), f) ==
                  static_cast<std::size_t>(n),
              ErrorKind::io, "checkpoint write failed");
    } else {
        for (std::int64_t i = 0; i < n; ++i) put_u32(f, std::bit_cast<std::uint32_t>(data[i]));
    }
}

void get_floats(std::FILE* f, float* data, std::int64_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        check(std::fread(data, sizeof(float), static_cast<std::size_t>(n), f) ==
                  static_cast<std::size_t>(n),
              ErrorKind::checkpoint, "checkpoint truncated");
    } else {
        for (std::int64_t i = 0; i < n; ++i) data[i] = std::bit_cast<float>(get_u32(f));
    }
}

void put_tensor(std::FILE* f, const Tensor& t) {
    put_u32(f, static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape()) put_u32(f, static_cast<std::uint32_t>(d));
    put_floats(f, t.data(), t.size());
}

Tensor get_tensor(std::FILE* f) {
    const std::uint32_t rank = get_u32(f);
    check(rank <= 8, ErrorKind::checkpoint, "checkpoint tensor rank out of range");
    std::vector<int> shape(rank);
    for (auto& d : shape) {
        const std::uint32_t v = get_u32(f);
        check(v > 0 && v < (1u << 28), ErrorKind::checkpoint, "checkpoint extent out of range");
        d = static_cast<int>(v);
    }
    Tensor t(shape);
    get_floats(f, t.data(), t.size());
    return t;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelSpec& spec, const ModelParams& params) {
    check_contract(params.layers.size() == spec.layers.size(), "params do not match model spec");
    File f(std::fopen(path.c_str(), "wb"));
    check(f != nullptr, ErrorKind::io, "cannot open checkpoint for writing: " + path);
    check(std::fwrite(kMagic, 1, sizeof kMagic, f.get()) == sizeof kMagic, ErrorKind::io,
          "checkpoint write failed");
    put_u32(f.get(), static_cast<std::uint32_t>(spec.name.size()));
    check(std::fwrite(spec.name.data(), 1, spec.name.size(), f.get()) == spec.name.size(),
          ErrorKind::io, "checkpoint write failed");
    std::uint32_t records = 0;
    for (const auto& p : params.layers) {
        if (!p.weights.empty()) ++records;
    }
    put_u32(f.get(), records);
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        const LayerParams& p = params.layers[i];
        if (p.weights.empty()) continue;
        put_u32(f.get(), static_cast<std::uint32_t>(i));
        put_u32(f.get(), 2);  // tensors per record: weights, bias
        put_tensor(f.get(), p.weights);
        put_tensor(f.get(), p.bias);
    }
    check(std::fflush(f.get()) == 0, ErrorKind::io, "checkpoint flush failed");
}

std::pair<ModelSpec, ModelParams> load_checkpoint(const std::string& path) {
    File f(std::fopen(path.c_str(), "rb"));
    check(f != nullptr, ErrorKind::io, "cannot open checkpoint: " + path);
    char magic[6];
    check(std::fread(magic, 1, sizeof magic, f.get()) == sizeof magic &&
              std::memcmp(magic, kMagic, sizeof kMagic) == 0,
          ErrorKind::checkpoint, "not a model checkpoint: " + path);
    const std::uint32_t name_len = get_u32(f.get());
    check(name_len < 256, ErrorKind::checkpoint, "checkpoint variant name too long");
    std::string name(name_len, '\0');
    check(std::fread(name.data(), 1, name_len, f.get()) == name_len, ErrorKind::checkpoint,
          "checkpoint truncated");
    const auto variant = variant_from_name(name);
    check(variant.has_value(), ErrorKind::checkpoint, "checkpoint names unknown variant: " + name);

    ModelSpec spec = build_model(*variant);
    // Expected parameter shapes come from a fresh init of the same variant.
    ModelParams expect = init_params(spec, 0);
    ModelParams params;
    params.layers.resize(spec.layers.size());

    const std::uint32_t records = get_u32(f.get());
    std::uint32_t expected_records = 0;
    for (const auto& p : expect.layers)
        if (!p.weights.empty()) ++expected_records;
    check(records == expected_records, ErrorKind::checkpoint,
          "checkpoint layer count does not match variant " + name);

    for (std::uint32_t r = 0; r < records; ++r) {
        const std::uint32_t idx = get_u32(f.get());
        check(idx < spec.layers.size(), ErrorKind::checkpoint, "checkpoint layer index out of range");
        check(!expect.layers[idx].weights.empty(), ErrorKind::checkpoint,
              "checkpoint record for a layer without parameters");
        const std::uint32_t n_tensors = get_u32(f.get());
        check(n_tensors == 2, ErrorKind::checkpoint, "checkpoint record must hold weights and bias");
        Tensor w = get_tensor(f.get());
        Tensor b = get_tensor(f.get());
        check(w.same_shape(expect.layers[idx].weights) && b.same_shape(expect.layers[idx].bias),
              ErrorKind::checkpoint, "checkpoint tensor shapes do not match variant " + name);
        params.layers[idx].weights = std::move(w);
        params.layers[idx].bias = std::move(b);
    }
    return {std::move(spec), std::move(params)};
}

}  // namespace stcae
