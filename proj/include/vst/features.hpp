#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vst/image.hpp"

namespace vst {

/// One layer's activations, planar layout: data[(c*height + y)*width + x].
/// channels is the filter count of the layer; spatial() is the product of
/// width and height.
struct FeatureMap {
    int channels = 0;
    int width = 0;
    int height = 0;
    std::vector<double> data;

    FeatureMap() = default;
    FeatureMap(int c, int w, int h)
        : channels(c), width(w), height(h),
          data(static_cast<size_t>(c) * w * h, 0.0) {}

    double& at(int c, int x, int y) {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    double at(int c, int x, int y) const {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    int spatial() const { return width * height; }
    bool same_shape(const FeatureMap& o) const {
        return channels == o.channels && width == o.width && height == o.height;
    }
};

/// Feature maps keyed by layer index, ascending.
struct FeatureStack {
    std::vector<std::pair<int, FeatureMap>> layers;

    const FeatureMap* find(int layer) const {
        for (const auto& [idx, fm] : layers)
            if (idx == layer) return &fm;
        return nullptr;
    }
};

/// Architecture of the deterministic extractor: a chain of 3x3 stride-1
/// zero-padded convolutions with rectifier nonlinearities, zero biases,
/// and optional 2x2 mean pooling after a stage. Filters are drawn from the
/// seed and normalized to unit Frobenius norm, so the whole feature
/// hierarchy is reproducible from this config alone.
struct ExtractorConfig {
    struct Stage {
        int in_channels = 0;
        int out_channels = 0;
        bool pool_after = false;
    };

    uint64_t seed = 977;
    std::vector<Stage> stages;

    /// Default compact architecture: channels 3->8->8->16->16 with mean
    /// pooling after stages 1 and 2. Style layers are conventionally
    /// {1,2,3,4} and the content layer {3} (see LossWeights defaults).
    static ExtractorConfig compact_default();

    /// Throws ValidationError if channel counts do not chain.
    void validate() const;
};

class Extractor {
public:
    /// Keeps every intermediate needed for exact input-gradient backprop.
    struct Trace {
        std::vector<FeatureMap> inputs;   // input to each stage's convolution
        std::vector<FeatureMap> preacts;  // convolution output before rectifier
    };

    /// Builds seeded, unit-norm filters. Throws on invalid config.
    static Extractor build(const ExtractorConfig& config);

    /// Constructs from explicit filter banks (mainly for tests). weights[s]
    /// holds stage s's filters, indexed [((o*in + i)*3 + ky)*3 + kx].
    static Extractor from_weights(const ExtractorConfig& config,
                                  std::vector<std::vector<double>> weights);

    const ExtractorConfig& config() const { return config_; }
    const std::vector<std::vector<double>>& weights() const { return weights_; }
    int num_layers() const { return static_cast<int>(config_.stages.size()); }

    /// Product of all pooling strides; input dims must be divisible by it.
    int pooling_factor() const;

    /// Rectified activations of the requested layers (1-based stage
    /// indices). Throws if image dims are not divisible by the pooling
    /// factor, with the padded size that would be accepted.
    FeatureStack forward(const Image& image, const std::vector<int>& layers) const;

    /// Full forward pass retaining intermediates.
    Trace trace(const Image& image) const;

    /// Rectified activations of the requested layers out of a trace.
    FeatureStack layers_from_trace(const Trace& trace,
                                   const std::vector<int>& layers) const;

    /// Exact chain-rule gradient with respect to the input pixels, for
    /// upstream gradients dL/dF^l keyed by layer index. The rectifier
    /// passes gradient where the pre-activation is > 0; mean pooling
    /// distributes gradient uniformly.
    Image backward(const Trace& trace,
                   const std::vector<std::pair<int, FeatureMap>>& upstream) const;

    /// Convenience overload that runs the forward trace internally.
    Image backward(const Image& image,
                   const std::vector<std::pair<int, FeatureMap>>& upstream) const;

private:
    ExtractorConfig config_;
    std::vector<std::vector<double>> weights_;
};

}  // namespace vst
