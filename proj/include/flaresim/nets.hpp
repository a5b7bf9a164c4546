#pragma once

#include "flaresim/image.hpp"
#include "flaresim/vae.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace flaresim::nets {

// H x W x C feature tensor, planar like ImageF but with free channel count.
struct FeatureBlock {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    FeatureBlock() = default;
    FeatureBlock(int h, int w, int c, double fill = 0.0)
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, fill) {}

    double& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    std::size_t size() const { return data.size(); }
};

// Dense cross-correlation weights, w[out][in][ky][kx], reflect padding keeps
// H x W. dilation spaces the taps.
struct Conv2dWeights {
    int out_ch = 0;
    int in_ch = 0;
    int ksize = 1;
    int dilation = 1;
    std::vector<double> w;
    std::vector<double> b;
};

FeatureBlock conv2d(const FeatureBlock& x, const Conv2dWeights& w);

// Per-channel convolution, w[c][ky][kx].
struct DepthwiseWeights {
    int channels = 0;
    int ksize = 3;
    int dilation = 1;
    std::vector<double> w;
    std::vector<double> b;
};

FeatureBlock depthwise_conv(const FeatureBlock& x, const DepthwiseWeights& w);

// (H, W, C) <-> (H/r, W/r, C*r^2). Sub-pixel order: output channel
// c*r^2 + dy*r + dx holds input channel c at offset (dy, dx).
FeatureBlock pixel_unshuffle(const FeatureBlock& x, int r = 2);
FeatureBlock pixel_shuffle(const FeatureBlock& x, int r = 2);

// Inference batch norm on stored running stats. Zero affine by default so
// freshly constructed blocks keep the residual-identity property.
struct BatchNormStats {
    std::vector<double> mean, var, gamma, beta;

    static BatchNormStats identity_off(int ch) {
        BatchNormStats s;
        s.mean.assign(static_cast<std::size_t>(ch), 0.0);
        s.var.assign(static_cast<std::size_t>(ch), 1.0);
        s.gamma.assign(static_cast<std::size_t>(ch), 0.0);
        s.beta.assign(static_cast<std::size_t>(ch), 0.0);
        return s;
    }
};

// Frequency-domain context: per-channel FFT, real/imag concatenated along
// channels, two 1x1 convs (the first with a residual), GELU, then ReLU + BN
// and inverse FFT; the real part is added back to the input.
struct FreqContextWeights {
    Conv2dWeights conv1, conv2; // 1x1 on 2C channels
    BatchNormStats bn;
};

FeatureBlock freq_context(const FeatureBlock& x, const FreqContextWeights& w);

// Local branch: first channel half through a token-wise MLP (same MLP at
// every pixel), second half through a dilated conv, concatenated back.
struct LocalEnhanceWeights {
    vae::MlpWeights token_mlp;  // C/2 -> C/2
    Conv2dWeights dilated;      // C/2 -> C/2
};

FeatureBlock local_enhance(const FeatureBlock& x, const LocalEnhanceWeights& w);

// Channel gates from globally pooled statistics (squeeze-and-excitation).
struct SqueezeExciteWeights {
    int channels = 0;
    int hidden = 0;
    std::vector<double> w1, b1; // channels -> hidden
    std::vector<double> w2, b2; // hidden -> channels
};

FeatureBlock squeeze_excite(const FeatureBlock& x, const SqueezeExciteWeights& w);

// Frequency mixer: PWConv -> split -> (local_enhance || freq_context) ->
// concat -> GELU -> PWConv -> squeeze_excite.
struct FreqMixerWeights {
    Conv2dWeights pw_in;  // C -> C
    LocalEnhanceWeights local;
    FreqContextWeights freq;
    Conv2dWeights pw_out; // C -> C
    SqueezeExciteWeights se;
};

FeatureBlock freq_mixer(const FeatureBlock& x, const FreqMixerWeights& w);

// Elementwise product of the two channel halves; channels halve.
FeatureBlock simple_gate(const FeatureBlock& x);

// S = Conv(AvgPool(x)) per channel; output = S * x.
struct ChannelAttnWeights {
    int channels = 0;
    std::vector<double> w; // channels x channels
    std::vector<double> b;
};

FeatureBlock channel_attention(const FeatureBlock& x, const ChannelAttnWeights& w);

// Spatial feed-forward: pointwise up-projection to E = expand*C, channel
// split; one half through depthwise + dilated convs, the other through
// simple_gate + channel_attention (E/4 channels out); concat (3E/4) and
// project back to C.
struct SpatialFfnWeights {
    Conv2dWeights up;          // C -> E
    DepthwiseWeights dw;       // E/2
    Conv2dWeights dilated;     // E/2 -> E/2
    ChannelAttnWeights attn;   // E/4
    Conv2dWeights down;        // 3E/4 -> C
};

FeatureBlock spatial_ffn(const FeatureBlock& x, const SpatialFfnWeights& w);

// Per-pixel layer norm over channels with affine.
struct LayerNormWeights {
    std::vector<double> gamma, beta;
};

FeatureBlock layer_norm(const FeatureBlock& x, const LayerNormWeights& w);

// Two pre-norm residual sub-layers: x += freq_mixer(norm(x));
// x += spatial_ffn(norm(x)).
struct MixerBlockWeights {
    LayerNormWeights ln1, ln2;
    FreqMixerWeights mixer;
    SpatialFfnWeights ffn;
};

FeatureBlock mixer_block(const FeatureBlock& x, const MixerBlockWeights& w);

struct ModelConfig {
    int stages = 3;          // encoder depth; stages-1 down/up steps
    int base_channels = 16;  // divisible by 4
    int blocks_per_stage = 1;
    int dilation = 2;
    int ffn_expand = 2;

    void validate() const;
    int level_channels(int level) const { return base_channels << level; }
};

// Full restoration model: conv stem, encoder stages (blocks + pixel_unshuffle
// + channel conv), bottleneck, decoder stages (pixel_shuffle + skip concat +
// fuse conv + blocks), output conv, then sigmoid(input + residual).
struct ModelWeights {
    struct EncStage {
        std::vector<MixerBlockWeights> blocks;
        Conv2dWeights down; // 4C -> 2C after unshuffle
    };
    struct DecStage {
        std::vector<MixerBlockWeights> blocks;
        Conv2dWeights fuse; // (C/2 + C_skip) -> C_skip
    };

    Conv2dWeights stem; // 3 -> C, 3x3
    std::vector<EncStage> encoder;
    std::vector<MixerBlockWeights> bottleneck;
    std::vector<DecStage> decoder;
    Conv2dWeights out_conv; // C -> 3, 3x3
};

ImageF model_forward(const ImageF& img, const ModelWeights& w, const ModelConfig& cfg);

// Deterministic init: uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero
// biases, LN gamma 1, BN stats (0,1) with zero affine. `zero` zeroes every
// learned tensor (BN variance stays 1), which makes the forward pass collapse
// to sigmoid(input).
ModelWeights init_model_weights(const ModelConfig& cfg, std::uint64_t seed, bool zero = false);

// One tensor dump per parameter plus a JSON manifest carrying the config.
void save_model_weights(const ModelWeights& w, const ModelConfig& cfg,
                        const std::filesystem::path& dir);
std::pair<ModelWeights, ModelConfig> load_model_weights(const std::filesystem::path& manifest_path);

} // namespace flaresim::nets
