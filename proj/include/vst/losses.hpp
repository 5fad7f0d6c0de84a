#pragma once

#include <map>
#include <utility>
#include <vector>

#include "vst/features.hpp"
#include "vst/image.hpp"

namespace vst {

/// Channel-by-channel inner products of one layer's features: G_ij =
/// sum_k F_ik F_jk. Symmetric positive semidefinite by construction.
struct GramMatrix {
    int layer = 0;
    int n = 0;
    std::vector<double> values;  // row-major n x n

    GramMatrix() = default;
    GramMatrix(int layer_idx, int dim)
        : layer(layer_idx), n(dim),
          values(static_cast<size_t>(dim) * dim, 0.0) {}

    double& at(int i, int j) { return values[static_cast<size_t>(i) * n + j]; }
    double at(int i, int j) const {
        return values[static_cast<size_t>(i) * n + j];
    }
};

GramMatrix gram(const FeatureMap& features, int layer_index = 0);

enum class TemporalNorm { squared, absolute };

/// Weighting of the composite objective: alpha scales the content term,
/// beta the style term, gamma every temporal term. long_term_offsets is
/// the ordered set of frame offsets a frame is held consistent with.
struct LossWeights {
    double alpha = 1.0;
    double beta = 100.0;
    double gamma = 400.0;
    std::vector<int> content_layers{3};
    std::vector<int> style_layers{1, 2, 3, 4};
    std::vector<int> long_term_offsets{1};
    TemporalNorm temporal_norm = TemporalNorm::squared;

    void validate() const;

    /// Robust variant: absolute-error temporal penalty with the temporal
    /// weight doubled.
    LossWeights with_robust_temporal() const;
};

/// One temporal anchor: a warped earlier (or later) stylized frame plus
/// the per-pixel consistency weights that gate the penalty.
struct TemporalTerm {
    Image warped;
    WeightMask weights;
};

/// Per-layer gradients aligned with a FeatureStack.
struct LayerGradients {
    std::vector<std::pair<int, FeatureMap>> grads;
};

/// Mean-squared feature difference, summed over the given layers with
/// 1/(N_l M_l) normalization. If grads is non-null it receives
/// dL/dF = 2(F - P)/(N_l M_l) per layer.
double content_loss_grad(const FeatureStack& F, const FeatureStack& P,
                         const std::vector<int>& layers, LayerGradients* grads);

/// Mean-squared Gram difference, summed over the given layers with
/// 1/(N_l^2 M_l^2) normalization. If grads is non-null it receives
/// dL/dF = 4 (G - A) F / (N_l^2 M_l^2) per layer.
double style_loss_grad(const FeatureStack& F,
                       const std::map<int, GramMatrix>& style_grams,
                       const std::vector<int>& layers, LayerGradients* grads);

/// Per-pixel weighted deviation from the warped frame, normalized by the
/// full component count D = W*H*C with the mask replicated over channels.
/// squared: (1/D) sum c (x - w)^2; absolute: (1/D) sum c |x - w| with the
/// subgradient defined as 0 at ties.
double temporal_loss_grad(const Image& x, const TemporalTerm& term,
                          TemporalNorm norm, Image* grad);

/// Precomputed per-frame context: content features P^l and style Gram
/// targets A^l. The style image is resampled to the content resolution
/// before feature extraction.
struct StyleContext {
    FeatureStack content_features;
    std::map<int, GramMatrix> style_grams;
};

StyleContext make_style_context(const Extractor& extractor, const Image& content,
                                const Image& style, const LossWeights& weights);

/// Loss components. content/style/temporal are the raw (unweighted)
/// values; total is the weighted sum.
struct LossBreakdown {
    double total = 0.0;
    double content = 0.0;
    double style = 0.0;
    double temporal = 0.0;
};

/// Composite objective: alpha*content + beta*style + gamma*(sum of
/// temporal terms). With an empty term list (or gamma == 0) this is
/// exactly the single-image objective. If grad is non-null it receives
/// the full pixel-space gradient.
LossBreakdown total_loss_grad(const Image& x, const StyleContext& context,
                              const std::vector<TemporalTerm>& temporal_terms,
                              const LossWeights& weights,
                              const Extractor& extractor, Image* grad);

}  // namespace vst
