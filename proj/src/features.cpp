#include "vst/features.hpp"

#include <algorithm>
#include <cmath>

namespace vst {

ExtractorConfig ExtractorConfig::compact_default() {
    ExtractorConfig cfg;
    cfg.stages = {{3, 8, true}, {8, 8, true}, {8, 16, false}, {16, 16, false}};
    return cfg;
}

void ExtractorConfig::validate() const {
    if (stages.empty())
        throw ValidationError("extractor config: no stages");
    for (size_t s = 0; s < stages.size(); ++s) {
        if (stages[s].in_channels <= 0 || stages[s].out_channels <= 0)
            throw ValidationError("extractor config: non-positive channel count");
        if (s > 0 && stages[s].in_channels != stages[s - 1].out_channels)
            throw ValidationError(
                "extractor config: channel chain broken between stage " +
                std::to_string(s) + " and " + std::to_string(s + 1));
    }
}

Extractor Extractor::build(const ExtractorConfig& config) {
    config.validate();
    Extractor e;
    e.config_ = config;
    Rng rng(config.seed);
    for (const auto& stage : config.stages) {
        const int block = stage.in_channels * 9;
        std::vector<double> w(static_cast<size_t>(stage.out_channels) * block);
        for (int o = 0; o < stage.out_channels; ++o) {
            double norm2 = 0.0;
            for (int k = 0; k < block; ++k) {
                double v = rng.normal();
                w[static_cast<size_t>(o) * block + k] = v;
                norm2 += v * v;
            }
            if (norm2 > 0.0) {
                const double inv = 1.0 / std::sqrt(norm2);
                for (int k = 0; k < block; ++k)
                    w[static_cast<size_t>(o) * block + k] *= inv;
            }
        }
        e.weights_.push_back(std::move(w));
    }
    return e;
}

Extractor Extractor::from_weights(const ExtractorConfig& config,
                                  std::vector<std::vector<double>> weights) {
    config.validate();
    if (weights.size() != config.stages.size())
        throw ValidationError("extractor weights: stage count mismatch");
    for (size_t s = 0; s < weights.size(); ++s) {
        const size_t want = static_cast<size_t>(config.stages[s].out_channels) *
                            config.stages[s].in_channels * 9;
        if (weights[s].size() != want)
            throw ValidationError("extractor weights: size mismatch at stage " +
                                  std::to_string(s + 1));
    }
    Extractor e;
    e.config_ = config;
    e.weights_ = std::move(weights);
    return e;
}

int Extractor::pooling_factor() const {
    int f = 1;
    for (const auto& s : config_.stages)
        if (s.pool_after) f *= 2;
    return f;
}

namespace {

// 3x3 zero-padded convolution, stride 1.
FeatureMap conv3x3(const FeatureMap& in, const std::vector<double>& w,
                   int out_channels) {
    const int W = in.width, H = in.height, C = in.channels;
    FeatureMap out(out_channels, W, H);
    for (int o = 0; o < out_channels; ++o) {
        const double* wo = w.data() + static_cast<size_t>(o) * C * 9;
        for (int y = 0; y < H; ++y) {
            const int ky_lo = y == 0 ? 1 : 0;
            const int ky_hi = y == H - 1 ? 1 : 2;
            for (int x = 0; x < W; ++x) {
                const int kx_lo = x == 0 ? 1 : 0;
                const int kx_hi = x == W - 1 ? 1 : 2;
                double acc = 0.0;
                for (int i = 0; i < C; ++i) {
                    const double* wi = wo + static_cast<size_t>(i) * 9;
                    for (int ky = ky_lo; ky <= ky_hi; ++ky) {
                        const double* row =
                            &in.data[(static_cast<size_t>(i) * H + (y + ky - 1)) *
                                     W];
                        for (int kx = kx_lo; kx <= kx_hi; ++kx)
                            acc += wi[ky * 3 + kx] * row[x + kx - 1];
                    }
                }
                out.at(o, x, y) = acc;
            }
        }
    }
    return out;
}

// Gradient of conv3x3 with respect to its input.
FeatureMap conv3x3_input_grad(const FeatureMap& gout,
                              const std::vector<double>& w, int in_channels) {
    const int W = gout.width, H = gout.height, O = gout.channels;
    FeatureMap gin(in_channels, W, H);
    for (int i = 0; i < in_channels; ++i) {
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double acc = 0.0;
                for (int o = 0; o < O; ++o) {
                    const double* wi = w.data() +
                                       (static_cast<size_t>(o) * in_channels + i) * 9;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int yy = y - ky + 1;
                        if (yy < 0 || yy >= H) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int xx = x - kx + 1;
                            if (xx < 0 || xx >= W) continue;
                            acc += wi[ky * 3 + kx] * gout.at(o, xx, yy);
                        }
                    }
                }
                gin.at(i, x, y) = acc;
            }
    }
    return gin;
}

FeatureMap relu(const FeatureMap& z) {
    FeatureMap f = z;
    for (auto& v : f.data)
        if (v < 0.0) v = 0.0;
    return f;
}

FeatureMap mean_pool2(const FeatureMap& in) {
    FeatureMap out(in.channels, in.width / 2, in.height / 2);
    for (int c = 0; c < in.channels; ++c)
        for (int y = 0; y < out.height; ++y)
            for (int x = 0; x < out.width; ++x)
                out.at(c, x, y) = 0.25 * (in.at(c, 2 * x, 2 * y) +
                                          in.at(c, 2 * x + 1, 2 * y) +
                                          in.at(c, 2 * x, 2 * y + 1) +
                                          in.at(c, 2 * x + 1, 2 * y + 1));
    return out;
}

FeatureMap mean_pool2_grad(const FeatureMap& gout, int in_w, int in_h) {
    FeatureMap gin(gout.channels, in_w, in_h);
    for (int c = 0; c < gout.channels; ++c)
        for (int y = 0; y < gout.height; ++y)
            for (int x = 0; x < gout.width; ++x) {
                const double g = 0.25 * gout.at(c, x, y);
                gin.at(c, 2 * x, 2 * y) = g;
                gin.at(c, 2 * x + 1, 2 * y) = g;
                gin.at(c, 2 * x, 2 * y + 1) = g;
                gin.at(c, 2 * x + 1, 2 * y + 1) = g;
            }
    return gin;
}

FeatureMap image_to_map(const Image& img) {
    FeatureMap m(img.channels, img.width, img.height);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                m.at(c, x, y) = img.at(x, y, c);
    return m;
}

Image map_to_image(const FeatureMap& m) {
    Image img(m.width, m.height, m.channels);
    for (int c = 0; c < m.channels; ++c)
        for (int y = 0; y < m.height; ++y)
            for (int x = 0; x < m.width; ++x)
                img.at(x, y, c) = m.at(c, x, y);
    return img;
}

}  // namespace

Extractor::Trace Extractor::trace(const Image& image) const {
    const int factor = pooling_factor();
    if (image.width % factor != 0 || image.height % factor != 0) {
        const int pw = (image.width + factor - 1) / factor * factor;
        const int ph = (image.height + factor - 1) / factor * factor;
        throw ValidationError(
            "extractor: image " + std::to_string(image.width) + "x" +
            std::to_string(image.height) + " not divisible by pooling factor " +
            std::to_string(factor) + "; pad to " + std::to_string(pw) + "x" +
            std::to_string(ph));
    }
    if (image.channels != config_.stages.front().in_channels)
        throw ValidationError("extractor: channel count mismatch");
    Trace t;
    FeatureMap cur = image_to_map(image);
    for (size_t s = 0; s < config_.stages.size(); ++s) {
        t.inputs.push_back(cur);
        FeatureMap z = conv3x3(cur, weights_[s], config_.stages[s].out_channels);
        FeatureMap f = relu(z);
        t.preacts.push_back(std::move(z));
        cur = config_.stages[s].pool_after ? mean_pool2(f) : std::move(f);
    }
    return t;
}

FeatureStack Extractor::layers_from_trace(const Trace& trace,
                                          const std::vector<int>& layers) const {
    FeatureStack stack;
    std::vector<int> sorted = layers;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (int l : sorted) {
        if (l < 1 || l > num_layers())
            throw ValidationError("extractor: layer index " + std::to_string(l) +
                                  " out of range 1.." + std::to_string(num_layers()));
        stack.layers.emplace_back(l, relu(trace.preacts[l - 1]));
    }
    return stack;
}

FeatureStack Extractor::forward(const Image& image,
                                const std::vector<int>& layers) const {
    return layers_from_trace(trace(image), layers);
}

Image Extractor::backward(
    const Trace& trace,
    const std::vector<std::pair<int, FeatureMap>>& upstream) const {
    const int S = num_layers();
    std::vector<const FeatureMap*> up(S + 1, nullptr);
    for (const auto& [l, g] : upstream) {
        if (l < 1 || l > S)
            throw ValidationError("extractor backward: layer index out of range");
        const FeatureMap& f = trace.preacts[l - 1];
        if (!g.same_shape(f))
            throw ValidationError("extractor backward: upstream shape mismatch at layer " +
                                  std::to_string(l));
        up[l] = &g;
    }
    FeatureMap carry;  // gradient w.r.t. the pooled output of the current stage
    bool have_carry = false;
    for (int s = S; s >= 1; --s) {
        const FeatureMap& z = trace.preacts[s - 1];
        FeatureMap gf(z.channels, z.width, z.height);
        if (have_carry) {
            gf = config_.stages[s - 1].pool_after
                     ? mean_pool2_grad(carry, z.width, z.height)
                     : std::move(carry);
        }
        if (up[s]) {
            for (size_t i = 0; i < gf.data.size(); ++i)
                gf.data[i] += up[s]->data[i];
        }
        // rectifier: pass gradient where pre-activation > 0
        for (size_t i = 0; i < gf.data.size(); ++i)
            if (z.data[i] <= 0.0) gf.data[i] = 0.0;
        carry = conv3x3_input_grad(gf, weights_[s - 1],
                                   config_.stages[s - 1].in_channels);
        have_carry = true;
    }
    return map_to_image(carry);
}

Image Extractor::backward(
    const Image& image,
    const std::vector<std::pair<int, FeatureMap>>& upstream) const {
    return backward(trace(image), upstream);
}

}  // namespace vst
