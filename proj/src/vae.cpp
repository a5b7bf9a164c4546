#include "flaresim/vae.hpp"

#include "flaresim/errors.hpp"
#include "flaresim/tensor_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace flaresim::vae {
namespace {

constexpr double kLogvarClamp = 20.0;

double apply_act(Activation a, double v) {
    switch (a) {
    case Activation::Identity: return v;
    case Activation::Relu: return v > 0.0 ? v : 0.0;
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-v));
    case Activation::Tanh: return std::tanh(v);
    }
    return v;
}

MlpLayer random_layer(int in_dim, int out_dim, Activation act, SeededRng& rng) {
    MlpLayer layer;
    layer.in_dim = in_dim;
    layer.out_dim = out_dim;
    layer.act = act;
    layer.weight.resize(static_cast<std::size_t>(in_dim) * out_dim);
    layer.bias.assign(static_cast<std::size_t>(out_dim), 0.0);
    const double s = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (double& v : layer.weight) v = rng.uniform(-s, s);
    return layer;
}

} // namespace

LatentStats make_latent_stats(std::vector<double> mu, std::vector<double> logvar) {
    if (mu.size() != logvar.size())
        throw std::invalid_argument("make_latent_stats: mu/logvar length mismatch");
    for (double v : mu)
        if (!std::isfinite(v)) throw std::invalid_argument("make_latent_stats: non-finite mu");
    for (double& v : logvar) {
        if (!std::isfinite(v)) throw std::invalid_argument("make_latent_stats: non-finite logvar");
        v = std::clamp(v, -kLogvarClamp, kLogvarClamp);
    }
    return {std::move(mu), std::move(logvar)};
}

KernelSizeMap kernel_size_map(const optics::PsfGrid& grid) {
    KernelSizeMap map;
    map.rows = grid.anchors.rows;
    map.cols = grid.anchors.cols;
    map.grid = optics::effective_kernel_sizes(grid);
    return map;
}

Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::Identity;
    if (name == "relu") return Activation::Relu;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "tanh") return Activation::Tanh;
    throw DataError("unknown activation: " + name);
}

std::string activation_name(Activation a) {
    switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
    }
    return "identity";
}

std::vector<double> mlp_forward(const MlpWeights& w, std::vector<double> input) {
    for (const auto& layer : w.layers) {
        if (static_cast<int>(input.size()) != layer.in_dim)
            throw std::invalid_argument("mlp_forward: layer input dimension mismatch");
        std::vector<double> out(static_cast<std::size_t>(layer.out_dim));
        for (int o = 0; o < layer.out_dim; ++o) {
            double acc = layer.bias[static_cast<std::size_t>(o)];
            const double* row = layer.weight.data() + static_cast<std::size_t>(o) * layer.in_dim;
            for (int i = 0; i < layer.in_dim; ++i) acc += row[i] * input[static_cast<std::size_t>(i)];
            out[static_cast<std::size_t>(o)] = apply_act(layer.act, acc);
        }
        input = std::move(out);
    }
    return input;
}

std::vector<double> reparameterize(const LatentStats& stats, const std::vector<double>& eps) {
    if (eps.size() != stats.mu.size())
        throw std::invalid_argument("reparameterize: eps length mismatch");
    std::vector<double> z(stats.mu.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        z[i] = stats.mu[i] + std::exp(0.5 * stats.logvar[i]) * eps[i];
    return z;
}

LatentStats encode(const zernike::CoeffField& coeffs, const KernelSizeMap& ksize,
                   const MlpWeights& w) {
    std::vector<double> input;
    for (const auto& c : coeffs.coeffs) input.insert(input.end(), c.a.begin(), c.a.end());
    input.insert(input.end(), ksize.grid.begin(), ksize.grid.end());
    if (static_cast<int>(input.size()) != w.input_dim())
        throw std::invalid_argument("encode: encoder input dimension mismatch");
    if (w.output_dim() % 2 != 0)
        throw std::invalid_argument("encode: encoder output must split in half");

    std::vector<double> out = mlp_forward(w, std::move(input));
    const std::size_t d = out.size() / 2;
    return make_latent_stats(std::vector<double>(out.begin(), out.begin() + d),
                             std::vector<double>(out.begin() + d, out.end()));
}

ImageF decode(const std::vector<double>& z, const MlpWeights& w, int out_h, int out_w, int out_c) {
    if (static_cast<int>(z.size()) != w.input_dim())
        throw std::invalid_argument("decode: latent dimension mismatch");
    if (w.output_dim() != out_h * out_w * out_c)
        throw std::invalid_argument("decode: decoder output does not match requested shape");

    std::vector<double> out = mlp_forward(w, z);
    ImageF img(out_h, out_w, out_c);
    for (std::size_t i = 0; i < out.size(); ++i)
        img.data[i] = 1.0 / (1.0 + std::exp(-out[i]));
    return img;
}

MlpWeights default_encoder(int input_dim, int latent_dim, SeededRng& rng) {
    MlpWeights w;
    w.layers.push_back(random_layer(input_dim, 128, Activation::Relu, rng));
    w.layers.push_back(random_layer(128, 128, Activation::Relu, rng));
    w.layers.push_back(random_layer(128, 2 * latent_dim, Activation::Identity, rng));
    return w;
}

MlpWeights default_decoder(int latent_dim, int output_dim, SeededRng& rng) {
    MlpWeights w;
    w.layers.push_back(random_layer(latent_dim, 128, Activation::Relu, rng));
    w.layers.push_back(random_layer(128, 128, Activation::Relu, rng));
    w.layers.push_back(random_layer(128, output_dim, Activation::Identity, rng));
    return w;
}

void save_mlp(const MlpWeights& w, const std::filesystem::path& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["name"] = name;
    manifest["layers"] = nlohmann::json::array();
    for (std::size_t i = 0; i < w.layers.size(); ++i) {
        const auto& layer = w.layers[i];
        const std::string wfile = name + "_w" + std::to_string(i) + ".fftd";
        const std::string bfile = name + "_b" + std::to_string(i) + ".fftd";
        dump_tensor(dir / wfile,
                    Tensor::from_doubles({static_cast<std::uint32_t>(layer.out_dim),
                                          static_cast<std::uint32_t>(layer.in_dim)},
                                         layer.weight));
        dump_tensor(dir / bfile,
                    Tensor::from_doubles({static_cast<std::uint32_t>(layer.out_dim)}, layer.bias));
        manifest["layers"].push_back({{"in", layer.in_dim},
                                      {"out", layer.out_dim},
                                      {"activation", activation_name(layer.act)},
                                      {"weight", wfile},
                                      {"bias", bfile}});
    }
    std::ofstream f(dir / (name + ".json"));
    if (!f) throw DataError("cannot write manifest in " + dir.string());
    f << manifest.dump(2) << "\n";
}

MlpWeights load_mlp(const std::filesystem::path& manifest_path) {
    std::ifstream f(manifest_path);
    if (!f) throw DataError("cannot open manifest: " + manifest_path.string());
    nlohmann::json manifest;
    try {
        f >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed manifest " + manifest_path.string() + ": " + e.what());
    }

    const auto dir = manifest_path.parent_path();
    MlpWeights w;
    for (const auto& entry : manifest.at("layers")) {
        MlpLayer layer;
        layer.in_dim = entry.at("in").get<int>();
        layer.out_dim = entry.at("out").get<int>();
        layer.act = activation_from_name(entry.at("activation").get<std::string>());
        layer.weight = load_tensor(dir / entry.at("weight").get<std::string>()).to_doubles();
        layer.bias = load_tensor(dir / entry.at("bias").get<std::string>()).to_doubles();
        if (static_cast<int>(layer.weight.size()) != layer.in_dim * layer.out_dim ||
            static_cast<int>(layer.bias.size()) != layer.out_dim)
            throw DataError("layer tensor shapes do not chain in " + manifest_path.string());
        if (!w.layers.empty() && w.layers.back().out_dim != layer.in_dim)
            throw DataError("consecutive layer dims do not chain in " + manifest_path.string());
        w.layers.push_back(std::move(layer));
    }
    return w;
}

} // namespace flaresim::vae
