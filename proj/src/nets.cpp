#include "flaresim/nets.hpp"

#include "flaresim/complex_field.hpp"
#include "flaresim/errors.hpp"
#include "flaresim/tensor_io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace flaresim::nets {
namespace {

constexpr double kLnEps = 1e-6;
constexpr double kBnEps = 1e-5;

int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
}

double gelu(double v) { return 0.5 * v * (1.0 + std::erf(v * 0.70710678118654752440)); }
double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

FeatureBlock concat_channels(const FeatureBlock& a, const FeatureBlock& b) {
    if (a.height != b.height || a.width != b.width)
        throw std::invalid_argument("concat_channels: spatial dims differ");
    FeatureBlock out(a.height, a.width, a.channels + b.channels);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
    return out;
}

FeatureBlock slice_channels(const FeatureBlock& x, int from, int count) {
    FeatureBlock out(x.height, x.width, count);
    const std::size_t plane = static_cast<std::size_t>(x.height) * x.width;
    std::copy(x.data.begin() + static_cast<std::ptrdiff_t>(from * plane),
              x.data.begin() + static_cast<std::ptrdiff_t>((from + count) * plane),
              out.data.begin());
    return out;
}

} // namespace

FeatureBlock conv2d(const FeatureBlock& x, const Conv2dWeights& w) {
    if (w.in_ch != x.channels) throw std::invalid_argument("conv2d: input channel mismatch");
    if (w.ksize % 2 == 0) throw std::invalid_argument("conv2d: kernel size must be odd");
    if (w.w.size() != static_cast<std::size_t>(w.out_ch) * w.in_ch * w.ksize * w.ksize ||
        w.b.size() != static_cast<std::size_t>(w.out_ch))
        throw std::invalid_argument("conv2d: weight shape mismatch");

    const int h = x.height, wd = x.width, half = w.ksize / 2;
    FeatureBlock out(h, wd, w.out_ch);
    for (int o = 0; o < w.out_ch; ++o) {
        for (int y = 0; y < h; ++y) {
            for (int xx = 0; xx < wd; ++xx) {
                double acc = w.b[static_cast<std::size_t>(o)];
                for (int i = 0; i < w.in_ch; ++i) {
                    const double* kw =
                        w.w.data() + (static_cast<std::size_t>(o) * w.in_ch + i) * w.ksize * w.ksize;
                    for (int ky = 0; ky < w.ksize; ++ky) {
                        const int sy = reflect_index(y + (ky - half) * w.dilation, h);
                        for (int kx = 0; kx < w.ksize; ++kx) {
                            const int sx = reflect_index(xx + (kx - half) * w.dilation, wd);
                            acc += kw[ky * w.ksize + kx] * x.at(i, sy, sx);
                        }
                    }
                }
                out.at(o, y, xx) = acc;
            }
        }
    }
    return out;
}

FeatureBlock depthwise_conv(const FeatureBlock& x, const DepthwiseWeights& w) {
    if (w.channels != x.channels) throw std::invalid_argument("depthwise_conv: channel mismatch");
    if (w.ksize % 2 == 0) throw std::invalid_argument("depthwise_conv: kernel size must be odd");
    if (w.w.size() != static_cast<std::size_t>(w.channels) * w.ksize * w.ksize ||
        w.b.size() != static_cast<std::size_t>(w.channels))
        throw std::invalid_argument("depthwise_conv: weight shape mismatch");

    const int h = x.height, wd = x.width, half = w.ksize / 2;
    FeatureBlock out(h, wd, x.channels);
    for (int c = 0; c < x.channels; ++c) {
        const double* kw = w.w.data() + static_cast<std::size_t>(c) * w.ksize * w.ksize;
        for (int y = 0; y < h; ++y) {
            for (int xx = 0; xx < wd; ++xx) {
                double acc = w.b[static_cast<std::size_t>(c)];
                for (int ky = 0; ky < w.ksize; ++ky) {
                    const int sy = reflect_index(y + (ky - half) * w.dilation, h);
                    for (int kx = 0; kx < w.ksize; ++kx) {
                        const int sx = reflect_index(xx + (kx - half) * w.dilation, wd);
                        acc += kw[ky * w.ksize + kx] * x.at(c, sy, sx);
                    }
                }
                out.at(c, y, xx) = acc;
            }
        }
    }
    return out;
}

FeatureBlock pixel_unshuffle(const FeatureBlock& x, int r) {
    if (r < 1 || x.height % r != 0 || x.width % r != 0)
        throw std::invalid_argument("pixel_unshuffle: dims not divisible by r");
    FeatureBlock out(x.height / r, x.width / r, x.channels * r * r);
    for (int c = 0; c < x.channels; ++c)
        for (int dy = 0; dy < r; ++dy)
            for (int dx = 0; dx < r; ++dx) {
                const int oc = c * r * r + dy * r + dx;
                for (int y = 0; y < out.height; ++y)
                    for (int xx = 0; xx < out.width; ++xx)
                        out.at(oc, y, xx) = x.at(c, y * r + dy, xx * r + dx);
            }
    return out;
}

FeatureBlock pixel_shuffle(const FeatureBlock& x, int r) {
    if (r < 1 || x.channels % (r * r) != 0)
        throw std::invalid_argument("pixel_shuffle: channels not divisible by r^2");
    FeatureBlock out(x.height * r, x.width * r, x.channels / (r * r));
    for (int c = 0; c < out.channels; ++c)
        for (int dy = 0; dy < r; ++dy)
            for (int dx = 0; dx < r; ++dx) {
                const int ic = c * r * r + dy * r + dx;
                for (int y = 0; y < x.height; ++y)
                    for (int xx = 0; xx < x.width; ++xx)
                        out.at(c, y * r + dy, xx * r + dx) = x.at(ic, y, xx);
            }
    return out;
}

FeatureBlock freq_context(const FeatureBlock& x, const FreqContextWeights& w) {
    const int c = x.channels, h = x.height, wd = x.width;
    const std::size_t plane = static_cast<std::size_t>(h) * wd;

    // per-channel spectrum, real/imag stacked along channels
    FeatureBlock f(h, wd, 2 * c);
    for (int i = 0; i < c; ++i) {
        ComplexField field(h, wd);
        std::copy(x.data.begin() + static_cast<std::ptrdiff_t>(i * plane),
                  x.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * plane), field.re.begin());
        const ComplexField spec = fft2(field);
        std::copy(spec.re.begin(), spec.re.end(),
                  f.data.begin() + static_cast<std::ptrdiff_t>(i * plane));
        std::copy(spec.im.begin(), spec.im.end(),
                  f.data.begin() + static_cast<std::ptrdiff_t>((c + i) * plane));
    }

    FeatureBlock f2 = conv2d(f, w.conv1);
    for (std::size_t i = 0; i < f2.size(); ++i) f2.data[i] += f.data[i];
    FeatureBlock f3 = conv2d(f2, w.conv2);
    for (double& v : f3.data) v = gelu(v);

    if (w.bn.mean.size() != static_cast<std::size_t>(2 * c))
        throw std::invalid_argument("freq_context: batch norm channel mismatch");
    for (int i = 0; i < 2 * c; ++i) {
        const double inv = 1.0 / std::sqrt(w.bn.var[static_cast<std::size_t>(i)] + kBnEps);
        double* p = f3.data.data() + static_cast<std::size_t>(i) * plane;
        for (std::size_t t = 0; t < plane; ++t) {
            double v = p[t] > 0.0 ? p[t] : 0.0; // ReLU before BN
            p[t] = (v - w.bn.mean[static_cast<std::size_t>(i)]) * inv *
                       w.bn.gamma[static_cast<std::size_t>(i)] +
                   w.bn.beta[static_cast<std::size_t>(i)];
        }
    }

    FeatureBlock out = x;
    for (int i = 0; i < c; ++i) {
        ComplexField spec(h, wd);
        std::copy(f3.data.begin() + static_cast<std::ptrdiff_t>(i * plane),
                  f3.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * plane), spec.re.begin());
        std::copy(f3.data.begin() + static_cast<std::ptrdiff_t>((c + i) * plane),
                  f3.data.begin() + static_cast<std::ptrdiff_t>((c + i + 1) * plane),
                  spec.im.begin());
        const ComplexField back = ifft2(spec);
        double* p = out.data.data() + static_cast<std::size_t>(i) * plane;
        for (std::size_t t = 0; t < plane; ++t) p[t] += back.re[t];
    }
    return out;
}

FeatureBlock local_enhance(const FeatureBlock& x, const LocalEnhanceWeights& w) {
    if (x.channels % 2 != 0) throw std::invalid_argument("local_enhance: channels must be even");
    const int half = x.channels / 2;
    const FeatureBlock a = slice_channels(x, 0, half);
    const FeatureBlock b = slice_channels(x, half, half);

    // token-wise MLP: same dense stack applied to every pixel's channel vector
    FeatureBlock am(a.height, a.width, half);
    std::vector<double> token(static_cast<std::size_t>(half));
    for (int y = 0; y < a.height; ++y) {
        for (int xx = 0; xx < a.width; ++xx) {
            for (int c = 0; c < half; ++c) token[static_cast<std::size_t>(c)] = a.at(c, y, xx);
            const auto res = vae::mlp_forward(w.token_mlp, token);
            if (static_cast<int>(res.size()) != half)
                throw std::invalid_argument("local_enhance: token MLP must preserve width");
            for (int c = 0; c < half; ++c) am.at(c, y, xx) = res[static_cast<std::size_t>(c)];
        }
    }
    return concat_channels(am, conv2d(b, w.dilated));
}

FeatureBlock squeeze_excite(const FeatureBlock& x, const SqueezeExciteWeights& w) {
    if (w.channels != x.channels) throw std::invalid_argument("squeeze_excite: channel mismatch");
    const std::size_t plane = static_cast<std::size_t>(x.height) * x.width;

    std::vector<double> pooled(static_cast<std::size_t>(x.channels), 0.0);
    for (int c = 0; c < x.channels; ++c) {
        const double* p = x.data.data() + static_cast<std::size_t>(c) * plane;
        double s = 0.0;
        for (std::size_t i = 0; i < plane; ++i) s += p[i];
        pooled[static_cast<std::size_t>(c)] = s / static_cast<double>(plane);
    }
    std::vector<double> hidden(static_cast<std::size_t>(w.hidden));
    for (int o = 0; o < w.hidden; ++o) {
        double acc = w.b1[static_cast<std::size_t>(o)];
        for (int i = 0; i < w.channels; ++i)
            acc += w.w1[static_cast<std::size_t>(o) * w.channels + i] * pooled[static_cast<std::size_t>(i)];
        hidden[static_cast<std::size_t>(o)] = acc > 0.0 ? acc : 0.0;
    }
    FeatureBlock out = x;
    for (int c = 0; c < w.channels; ++c) {
        double acc = w.b2[static_cast<std::size_t>(c)];
        for (int i = 0; i < w.hidden; ++i)
            acc += w.w2[static_cast<std::size_t>(c) * w.hidden + i] * hidden[static_cast<std::size_t>(i)];
        const double gate = sigmoid(acc);
        double* p = out.data.data() + static_cast<std::size_t>(c) * plane;
        for (std::size_t i = 0; i < plane; ++i) p[i] *= gate;
    }
    return out;
}

FeatureBlock freq_mixer(const FeatureBlock& x, const FreqMixerWeights& w) {
    if (x.channels % 2 != 0) throw std::invalid_argument("freq_mixer: channels must be even");
    FeatureBlock f = conv2d(x, w.pw_in);
    const int half = f.channels / 2;
    const FeatureBlock local = local_enhance(slice_channels(f, 0, half), w.local);
    const FeatureBlock global = freq_context(slice_channels(f, half, half), w.freq);
    FeatureBlock merged = concat_channels(local, global);
    for (double& v : merged.data) v = gelu(v);
    return squeeze_excite(conv2d(merged, w.pw_out), w.se);
}

FeatureBlock simple_gate(const FeatureBlock& x) {
    if (x.channels % 2 != 0) throw std::invalid_argument("simple_gate: channels must be even");
    const int half = x.channels / 2;
    const std::size_t plane = static_cast<std::size_t>(x.height) * x.width;
    FeatureBlock out(x.height, x.width, half);
    for (int c = 0; c < half; ++c) {
        const double* a = x.data.data() + static_cast<std::size_t>(c) * plane;
        const double* b = x.data.data() + static_cast<std::size_t>(c + half) * plane;
        double* o = out.data.data() + static_cast<std::size_t>(c) * plane;
        for (std::size_t i = 0; i < plane; ++i) o[i] = a[i] * b[i];
    }
    return out;
}

FeatureBlock channel_attention(const FeatureBlock& x, const ChannelAttnWeights& w) {
    if (w.channels != x.channels) throw std::invalid_argument("channel_attention: channel mismatch");
    const std::size_t plane = static_cast<std::size_t>(x.height) * x.width;

    std::vector<double> pooled(static_cast<std::size_t>(x.channels), 0.0);
    for (int c = 0; c < x.channels; ++c) {
        const double* p = x.data.data() + static_cast<std::size_t>(c) * plane;
        double s = 0.0;
        for (std::size_t i = 0; i < plane; ++i) s += p[i];
        pooled[static_cast<std::size_t>(c)] = s / static_cast<double>(plane);
    }
    FeatureBlock out = x;
    for (int c = 0; c < x.channels; ++c) {
        double s = w.b[static_cast<std::size_t>(c)];
        for (int i = 0; i < x.channels; ++i)
            s += w.w[static_cast<std::size_t>(c) * x.channels + i] * pooled[static_cast<std::size_t>(i)];
        double* p = out.data.data() + static_cast<std::size_t>(c) * plane;
        for (std::size_t i = 0; i < plane; ++i) p[i] *= s;
    }
    return out;
}

FeatureBlock spatial_ffn(const FeatureBlock& x, const SpatialFfnWeights& w) {
    FeatureBlock up = conv2d(x, w.up);
    if (up.channels % 4 != 0)
        throw std::invalid_argument("spatial_ffn: expanded channels must be divisible by 4");
    const int half = up.channels / 2;

    FeatureBlock dir = depthwise_conv(slice_channels(up, 0, half), w.dw);
    dir = conv2d(dir, w.dilated);

    FeatureBlock gate = simple_gate(slice_channels(up, half, half));
    gate = channel_attention(gate, w.attn);

    return conv2d(concat_channels(dir, gate), w.down);
}

FeatureBlock layer_norm(const FeatureBlock& x, const LayerNormWeights& w) {
    if (w.gamma.size() != static_cast<std::size_t>(x.channels) || w.beta.size() != w.gamma.size())
        throw std::invalid_argument("layer_norm: affine shape mismatch");
    FeatureBlock out(x.height, x.width, x.channels);
    for (int y = 0; y < x.height; ++y) {
        for (int xx = 0; xx < x.width; ++xx) {
            double mean = 0.0;
            for (int c = 0; c < x.channels; ++c) mean += x.at(c, y, xx);
            mean /= x.channels;
            double var = 0.0;
            for (int c = 0; c < x.channels; ++c) {
                const double d = x.at(c, y, xx) - mean;
                var += d * d;
            }
            var /= x.channels;
            const double inv = 1.0 / std::sqrt(var + kLnEps);
            for (int c = 0; c < x.channels; ++c)
                out.at(c, y, xx) = (x.at(c, y, xx) - mean) * inv * w.gamma[static_cast<std::size_t>(c)] +
                                   w.beta[static_cast<std::size_t>(c)];
        }
    }
    return out;
}

FeatureBlock mixer_block(const FeatureBlock& x, const MixerBlockWeights& w) {
    FeatureBlock out = x;
    {
        const FeatureBlock m = freq_mixer(layer_norm(out, w.ln1), w.mixer);
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += m.data[i];
    }
    {
        const FeatureBlock f = spatial_ffn(layer_norm(out, w.ln2), w.ffn);
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += f.data[i];
    }
    return out;
}

void ModelConfig::validate() const {
    if (stages < 1) throw std::invalid_argument("ModelConfig: stages must be >= 1");
    if (base_channels < 4 || base_channels % 4 != 0)
        throw std::invalid_argument("ModelConfig: base_channels must be a positive multiple of 4");
    if (blocks_per_stage < 1) throw std::invalid_argument("ModelConfig: blocks_per_stage must be >= 1");
    if (dilation < 1) throw std::invalid_argument("ModelConfig: dilation must be >= 1");
    if (ffn_expand < 1 || (ffn_expand * base_channels) % 4 != 0)
        throw std::invalid_argument("ModelConfig: ffn expansion must keep channels divisible by 4");
}

ImageF model_forward(const ImageF& img, const ModelWeights& w, const ModelConfig& cfg) {
    cfg.validate();
    if (img.channels != 3) throw std::invalid_argument("model_forward: 3-channel input required");
    const int div = 1 << (cfg.stages - 1);
    if (img.height % div != 0 || img.width % div != 0)
        throw std::invalid_argument("model_forward: resolution must be divisible by 2^(stages-1)");

    FeatureBlock x(img.height, img.width, 3);
    x.data = img.data;
    x = conv2d(x, w.stem);

    std::vector<FeatureBlock> skips;
    for (int s = 0; s + 1 < cfg.stages; ++s) {
        for (const auto& blk : w.encoder[static_cast<std::size_t>(s)].blocks) x = mixer_block(x, blk);
        skips.push_back(x);
        x = pixel_unshuffle(x, 2);
        x = conv2d(x, w.encoder[static_cast<std::size_t>(s)].down);
    }
    for (const auto& blk : w.bottleneck) x = mixer_block(x, blk);
    for (int s = 0; s + 1 < cfg.stages; ++s) {
        x = pixel_shuffle(x, 2);
        x = concat_channels(x, skips[skips.size() - 1 - static_cast<std::size_t>(s)]);
        x = conv2d(x, w.decoder[static_cast<std::size_t>(s)].fuse);
        for (const auto& blk : w.decoder[static_cast<std::size_t>(s)].blocks) x = mixer_block(x, blk);
    }
    const FeatureBlock res = conv2d(x, w.out_conv);

    ImageF out(img.height, img.width, 3);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = sigmoid(img.data[i] + res.data[i]);
    return out;
}

// ---------------------------------------------------------------------------
// weight structure, init and persistence
// ---------------------------------------------------------------------------

namespace {

Conv2dWeights make_conv(int out, int in, int k, int dil) {
    Conv2dWeights c;
    c.out_ch = out;
    c.in_ch = in;
    c.ksize = k;
    c.dilation = dil;
    c.w.assign(static_cast<std::size_t>(out) * in * k * k, 0.0);
    c.b.assign(static_cast<std::size_t>(out), 0.0);
    return c;
}

DepthwiseWeights make_depthwise(int ch, int k, int dil) {
    DepthwiseWeights d;
    d.channels = ch;
    d.ksize = k;
    d.dilation = dil;
    d.w.assign(static_cast<std::size_t>(ch) * k * k, 0.0);
    d.b.assign(static_cast<std::size_t>(ch), 0.0);
    return d;
}

MixerBlockWeights make_block(int ch, const ModelConfig& cfg) {
    MixerBlockWeights b;
    b.ln1.gamma.assign(static_cast<std::size_t>(ch), 0.0);
    b.ln1.beta.assign(static_cast<std::size_t>(ch), 0.0);
    b.ln2 = b.ln1;

    const int half = ch / 2;    // per-branch channels after the split
    const int quarter = ch / 4; // the local branch splits once more
    b.mixer.pw_in = make_conv(ch, ch, 1, 1);
    vae::MlpLayer l1;
    l1.in_dim = quarter;
    l1.out_dim = quarter;
    l1.act = vae::Activation::Relu;
    l1.weight.assign(static_cast<std::size_t>(quarter) * quarter, 0.0);
    l1.bias.assign(static_cast<std::size_t>(quarter), 0.0);
    vae::MlpLayer l2 = l1;
    l2.act = vae::Activation::Identity;
    b.mixer.local.token_mlp.layers = {l1, l2};
    b.mixer.local.dilated = make_conv(quarter, quarter, 3, cfg.dilation);
    b.mixer.freq.conv1 = make_conv(2 * half, 2 * half, 1, 1); // real+imag stacked
    b.mixer.freq.conv2 = make_conv(2 * half, 2 * half, 1, 1);
    b.mixer.freq.bn = BatchNormStats::identity_off(2 * half);
    b.mixer.pw_out = make_conv(ch, ch, 1, 1);
    b.mixer.se.channels = ch;
    b.mixer.se.hidden = std::max(1, ch / 4);
    b.mixer.se.w1.assign(static_cast<std::size_t>(b.mixer.se.hidden) * ch, 0.0);
    b.mixer.se.b1.assign(static_cast<std::size_t>(b.mixer.se.hidden), 0.0);
    b.mixer.se.w2.assign(static_cast<std::size_t>(ch) * b.mixer.se.hidden, 0.0);
    b.mixer.se.b2.assign(static_cast<std::size_t>(ch), 0.0);

    const int e = cfg.ffn_expand * ch;
    b.ffn.up = make_conv(e, ch, 1, 1);
    b.ffn.dw = make_depthwise(e / 2, 3, 1);
    b.ffn.dilated = make_conv(e / 2, e / 2, 3, cfg.dilation);
    b.ffn.attn.channels = e / 4;
    b.ffn.attn.w.assign(static_cast<std::size_t>(e / 4) * (e / 4), 0.0);
    b.ffn.attn.b.assign(static_cast<std::size_t>(e / 4), 0.0);
    b.ffn.down = make_conv(ch, e / 2 + e / 4, 1, 1);
    return b;
}

ModelWeights structure_model(const ModelConfig& cfg) {
    cfg.validate();
    ModelWeights w;
    w.stem = make_conv(cfg.base_channels, 3, 3, 1);
    for (int s = 0; s + 1 < cfg.stages; ++s) {
        const int ch = cfg.level_channels(s);
        ModelWeights::EncStage stage;
        for (int b = 0; b < cfg.blocks_per_stage; ++b) stage.blocks.push_back(make_block(ch, cfg));
        stage.down = make_conv(2 * ch, 4 * ch, 1, 1);
        w.encoder.push_back(std::move(stage));
    }
    const int deep = cfg.level_channels(cfg.stages - 1);
    for (int b = 0; b < cfg.blocks_per_stage; ++b) w.bottleneck.push_back(make_block(deep, cfg));
    for (int s = 0; s + 1 < cfg.stages; ++s) {
        const int ch = cfg.level_channels(cfg.stages - 2 - s); // target level channels
        ModelWeights::DecStage stage;
        stage.fuse = make_conv(ch, ch / 2 + ch, 1, 1);
        for (int b = 0; b < cfg.blocks_per_stage; ++b) stage.blocks.push_back(make_block(ch, cfg));
        w.decoder.push_back(std::move(stage));
    }
    w.out_conv = make_conv(3, cfg.base_channels, 3, 1);
    return w;
}

enum class ParamKind { Weight, Bias, LnGamma, LnBeta, BnMean, BnVar, BnGamma, BnBeta };

struct ParamRef {
    std::string name;
    std::vector<std::uint32_t> shape;
    std::vector<double>* data;
    ParamKind kind;
    int fan_in;
};

void add_conv(std::vector<ParamRef>& out, const std::string& name, Conv2dWeights& c) {
    out.push_back({name + ".w",
                   {static_cast<std::uint32_t>(c.out_ch), static_cast<std::uint32_t>(c.in_ch),
                    static_cast<std::uint32_t>(c.ksize), static_cast<std::uint32_t>(c.ksize)},
                   &c.w, ParamKind::Weight, c.in_ch * c.ksize * c.ksize});
    out.push_back({name + ".b", {static_cast<std::uint32_t>(c.out_ch)}, &c.b, ParamKind::Bias, 0});
}

void add_block(std::vector<ParamRef>& out, const std::string& name, MixerBlockWeights& b) {
    const auto ch = static_cast<std::uint32_t>(b.ln1.gamma.size());
    out.push_back({name + ".ln1.gamma", {ch}, &b.ln1.gamma, ParamKind::LnGamma, 0});
    out.push_back({name + ".ln1.beta", {ch}, &b.ln1.beta, ParamKind::LnBeta, 0});
    add_conv(out, name + ".mix.pw_in", b.mixer.pw_in);
    for (std::size_t i = 0; i < b.mixer.local.token_mlp.layers.size(); ++i) {
        auto& layer = b.mixer.local.token_mlp.layers[i];
        out.push_back({name + ".mix.mlp" + std::to_string(i) + ".w",
                       {static_cast<std::uint32_t>(layer.out_dim),
                        static_cast<std::uint32_t>(layer.in_dim)},
                       &layer.weight, ParamKind::Weight, layer.in_dim});
        out.push_back({name + ".mix.mlp" + std::to_string(i) + ".b",
                       {static_cast<std::uint32_t>(layer.out_dim)}, &layer.bias, ParamKind::Bias, 0});
    }
    add_conv(out, name + ".mix.dconv", b.mixer.local.dilated);
    add_conv(out, name + ".mix.fconv1", b.mixer.freq.conv1);
    add_conv(out, name + ".mix.fconv2", b.mixer.freq.conv2);
    const auto bnc = static_cast<std::uint32_t>(b.mixer.freq.bn.mean.size());
    out.push_back({name + ".mix.bn.mean", {bnc}, &b.mixer.freq.bn.mean, ParamKind::BnMean, 0});
    out.push_back({name + ".mix.bn.var", {bnc}, &b.mixer.freq.bn.var, ParamKind::BnVar, 0});
    out.push_back({name + ".mix.bn.gamma", {bnc}, &b.mixer.freq.bn.gamma, ParamKind::BnGamma, 0});
    out.push_back({name + ".mix.bn.beta", {bnc}, &b.mixer.freq.bn.beta, ParamKind::BnBeta, 0});
    add_conv(out, name + ".mix.pw_out", b.mixer.pw_out);
    auto& se = b.mixer.se;
    out.push_back({name + ".mix.se.w1",
                   {static_cast<std::uint32_t>(se.hidden), static_cast<std::uint32_t>(se.channels)},
                   &se.w1, ParamKind::Weight, se.channels});
    out.push_back({name + ".mix.se.b1", {static_cast<std::uint32_t>(se.hidden)}, &se.b1,
                   ParamKind::Bias, 0});
    out.push_back({name + ".mix.se.w2",
                   {static_cast<std::uint32_t>(se.channels), static_cast<std::uint32_t>(se.hidden)},
                   &se.w2, ParamKind::Weight, se.hidden});
    out.push_back({name + ".mix.se.b2", {static_cast<std::uint32_t>(se.channels)}, &se.b2,
                   ParamKind::Bias, 0});

    out.push_back({name + ".ln2.gamma", {ch}, &b.ln2.gamma, ParamKind::LnGamma, 0});
    out.push_back({name + ".ln2.beta", {ch}, &b.ln2.beta, ParamKind::LnBeta, 0});
    add_conv(out, name + ".ffn.up", b.ffn.up);
    auto& dw = b.ffn.dw;
    out.push_back({name + ".ffn.dw.w",
                   {static_cast<std::uint32_t>(dw.channels), static_cast<std::uint32_t>(dw.ksize),
                    static_cast<std::uint32_t>(dw.ksize)},
                   &dw.w, ParamKind::Weight, dw.ksize * dw.ksize});
    out.push_back({name + ".ffn.dw.b", {static_cast<std::uint32_t>(dw.channels)}, &dw.b,
                   ParamKind::Bias, 0});
    add_conv(out, name + ".ffn.dilated", b.ffn.dilated);
    auto& attn = b.ffn.attn;
    out.push_back({name + ".ffn.attn.w",
                   {static_cast<std::uint32_t>(attn.channels), static_cast<std::uint32_t>(attn.channels)},
                   &attn.w, ParamKind::Weight, attn.channels});
    out.push_back({name + ".ffn.attn.b", {static_cast<std::uint32_t>(attn.channels)}, &attn.b,
                   ParamKind::Bias, 0});
    add_conv(out, name + ".ffn.down", b.ffn.down);
}

std::vector<ParamRef> collect_params(ModelWeights& w) {
    std::vector<ParamRef> out;
    add_conv(out, "stem", w.stem);
    for (std::size_t s = 0; s < w.encoder.size(); ++s) {
        const std::string prefix = "enc" + std::to_string(s);
        for (std::size_t b = 0; b < w.encoder[s].blocks.size(); ++b)
            add_block(out, prefix + ".blk" + std::to_string(b), w.encoder[s].blocks[b]);
        add_conv(out, prefix + ".down", w.encoder[s].down);
    }
    for (std::size_t b = 0; b < w.bottleneck.size(); ++b)
        add_block(out, "mid.blk" + std::to_string(b), w.bottleneck[b]);
    for (std::size_t s = 0; s < w.decoder.size(); ++s) {
        const std::string prefix = "dec" + std::to_string(s);
        add_conv(out, prefix + ".fuse", w.decoder[s].fuse);
        for (std::size_t b = 0; b < w.decoder[s].blocks.size(); ++b)
            add_block(out, prefix + ".blk" + std::to_string(b), w.decoder[s].blocks[b]);
    }
    add_conv(out, "out", w.out_conv);
    return out;
}

} // namespace

ModelWeights init_model_weights(const ModelConfig& cfg, std::uint64_t seed, bool zero) {
    ModelWeights w = structure_model(cfg);
    SeededRng rng(seed);
    for (auto& p : collect_params(w)) {
        switch (p.kind) {
        case ParamKind::Weight:
            if (!zero) {
                const double s = 1.0 / std::sqrt(static_cast<double>(std::max(1, p.fan_in)));
                for (double& v : *p.data) v = rng.uniform(-s, s);
            }
            break;
        case ParamKind::LnGamma:
            if (!zero)
                for (double& v : *p.data) v = 1.0;
            break;
        case ParamKind::BnVar:
            for (double& v : *p.data) v = 1.0;
            break;
        default:
            break; // biases, betas, BN mean/affine stay zero
        }
    }
    return w;
}

void save_model_weights(const ModelWeights& w, const ModelConfig& cfg,
                        const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto& mutable_w = const_cast<ModelWeights&>(w); // params are only read here
    nlohmann::json manifest;
    manifest["config"] = {{"stages", cfg.stages},
                          {"base_channels", cfg.base_channels},
                          {"blocks_per_stage", cfg.blocks_per_stage},
                          {"dilation", cfg.dilation},
                          {"ffn_expand", cfg.ffn_expand}};
    manifest["tensors"] = nlohmann::json::array();
    for (const auto& p : collect_params(mutable_w)) {
        const std::string file = p.name + ".fftd";
        dump_tensor(dir / file, Tensor::from_doubles(p.shape, *p.data));
        manifest["tensors"].push_back({{"name", p.name}, {"file", file}});
    }
    std::ofstream f(dir / "model.json");
    if (!f) throw DataError("cannot write model manifest in " + dir.string());
    f << manifest.dump(2) << "\n";
}

std::pair<ModelWeights, ModelConfig> load_model_weights(const std::filesystem::path& manifest_path) {
    std::ifstream f(manifest_path);
    if (!f) throw DataError("cannot open model manifest: " + manifest_path.string());
    nlohmann::json manifest;
    try {
        f >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed model manifest " + manifest_path.string() + ": " + e.what());
    }

    ModelConfig cfg;
    const auto& jc = manifest.at("config");
    cfg.stages = jc.at("stages").get<int>();
    cfg.base_channels = jc.at("base_channels").get<int>();
    cfg.blocks_per_stage = jc.at("blocks_per_stage").get<int>();
    cfg.dilation = jc.at("dilation").get<int>();
    cfg.ffn_expand = jc.at("ffn_expand").get<int>();

    ModelWeights w = structure_model(cfg);
    auto params = collect_params(w);
    std::map<std::string, ParamRef*> by_name;
    for (auto& p : params) by_name[p.name] = &p;

    const auto dir = manifest_path.parent_path();
    std::size_t loaded = 0;
    for (const auto& entry : manifest.at("tensors")) {
        const std::string name = entry.at("name").get<std::string>();
        const auto it = by_name.find(name);
        if (it == by_name.end())
            throw DataError("unknown tensor '" + name + "' in " + manifest_path.string());
        const Tensor t = load_tensor(dir / entry.at("file").get<std::string>());
        if (t.dims != it->second->shape)
            throw DataError("tensor '" + name + "' has unexpected shape in " + manifest_path.string());
        *it->second->data = t.to_doubles();
        ++loaded;
    }
    if (loaded != params.size())
        throw DataError("model manifest is missing tensors: " + manifest_path.string());
    return {std::move(w), cfg};
}

} // namespace flaresim::nets
