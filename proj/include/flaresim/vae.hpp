#pragma once

#include "flaresim/image.hpp"
#include "flaresim/optics.hpp"
#include "flaresim/rng.hpp"
#include "flaresim/zernike.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace flaresim::vae {

// Latent Gaussian parameters; logvar is clamped to [-20, 20] on construction.
struct LatentStats {
    std::vector<double> mu;
    std::vector<double> logvar;
};

LatentStats make_latent_stats(std::vector<double> mu, std::vector<double> logvar);

// Effective PSF support in taps, one scalar per anchor; values >= 1.
struct KernelSizeMap {
    int rows = 0;
    int cols = 0;
    std::vector<double> grid;
};

KernelSizeMap kernel_size_map(const optics::PsfGrid& grid);

enum class Activation { Identity, Relu, Sigmoid, Tanh };

Activation activation_from_name(const std::string& name);
std::string activation_name(Activation a);

// Dense layer, weight stored row-major as [out_dim][in_dim].
struct MlpLayer {
    int in_dim = 0;
    int out_dim = 0;
    std::vector<double> weight;
    std::vector<double> bias;
    Activation act = Activation::Identity;
};

struct MlpWeights {
    std::vector<MlpLayer> layers;

    int input_dim() const { return layers.empty() ? 0 : layers.front().in_dim; }
    int output_dim() const { return layers.empty() ? 0 : layers.back().out_dim; }
};

std::vector<double> mlp_forward(const MlpWeights& w, std::vector<double> input);

// z = mu + exp(0.5 * logvar) * eps, elementwise.
std::vector<double> reparameterize(const LatentStats& stats, const std::vector<double>& eps);

// Flattened coefficients + kernel-size map through the encoder MLP; the output
// splits in half into (mu, logvar), logvar clamped.
LatentStats encode(const zernike::CoeffField& coeffs, const KernelSizeMap& ksize,
                   const MlpWeights& w);

// Latent code through the decoder MLP, final sigmoid, reshaped to
// (out_h, out_w, out_c); samples land strictly inside (0, 1).
ImageF decode(const std::vector<double>& z, const MlpWeights& w, int out_h, int out_w, int out_c);

// Deterministic seeded defaults: two hidden layers of width 128, ReLU inside,
// linear head. Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
MlpWeights default_encoder(int input_dim, int latent_dim, SeededRng& rng);
MlpWeights default_decoder(int latent_dim, int output_dim, SeededRng& rng);

// Weights persist as one tensor dump per parameter next to a JSON manifest
// (layer order and activations).
void save_mlp(const MlpWeights& w, const std::filesystem::path& dir, const std::string& name);
MlpWeights load_mlp(const std::filesystem::path& manifest_path);

} // namespace flaresim::vae
