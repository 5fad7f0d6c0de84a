#include "vst/losses.hpp"

#include <algorithm>
#include <cmath>

namespace vst {

GramMatrix gram(const FeatureMap& features, int layer_index) {
    const int n = features.channels;
    const int m = features.spatial();
    GramMatrix g(layer_index, n);
    for (int i = 0; i < n; ++i) {
        const double* fi = features.data.data() + static_cast<size_t>(i) * m;
        for (int j = i; j < n; ++j) {
            const double* fj = features.data.data() + static_cast<size_t>(j) * m;
            double acc = 0.0;
            for (int k = 0; k < m; ++k) acc += fi[k] * fj[k];
            g.at(i, j) = acc;
            g.at(j, i) = acc;
        }
    }
    return g;
}

void LossWeights::validate() const {
    if (alpha < 0 || beta < 0 || gamma < 0)
        throw ValidationError("loss weights must be non-negative");
    int prev = 0;
    for (int j : long_term_offsets) {
        if (j <= prev)
            throw ValidationError(
                "long-term offsets must be strictly increasing positive integers");
        prev = j;
    }
}

LossWeights LossWeights::with_robust_temporal() const {
    LossWeights w = *this;
    w.temporal_norm = TemporalNorm::absolute;
    w.gamma = 2.0 * gamma;
    return w;
}

double content_loss_grad(const FeatureStack& F, const FeatureStack& P,
                         const std::vector<int>& layers, LayerGradients* grads) {
    double loss = 0.0;
    for (int l : layers) {
        const FeatureMap* f = F.find(l);
        const FeatureMap* p = P.find(l);
        if (!f || !p)
            throw ValidationError("content loss: layer " + std::to_string(l) +
                                  " missing from a feature stack");
        if (!f->same_shape(*p))
            throw ValidationError("content loss: shape mismatch at layer " +
                                  std::to_string(l));
        const double norm = 1.0 / (static_cast<double>(f->channels) * f->spatial());
        double acc = 0.0;
        if (grads) {
            FeatureMap g(f->channels, f->width, f->height);
            for (size_t i = 0; i < f->data.size(); ++i) {
                const double d = f->data[i] - p->data[i];
                acc += d * d;
                g.data[i] = 2.0 * norm * d;
            }
            grads->grads.emplace_back(l, std::move(g));
        } else {
            for (size_t i = 0; i < f->data.size(); ++i) {
                const double d = f->data[i] - p->data[i];
                acc += d * d;
            }
        }
        loss += norm * acc;
    }
    return loss;
}

double style_loss_grad(const FeatureStack& F,
                       const std::map<int, GramMatrix>& style_grams,
                       const std::vector<int>& layers, LayerGradients* grads) {
    double loss = 0.0;
    for (int l : layers) {
        const FeatureMap* f = F.find(l);
        if (!f)
            throw ValidationError("style loss: layer " + std::to_string(l) +
                                  " missing from feature stack");
        auto it = style_grams.find(l);
        if (it == style_grams.end())
            throw ValidationError("style loss: no Gram target for layer " +
                                  std::to_string(l));
        const GramMatrix& a = it->second;
        const int n = f->channels;
        const int m = f->spatial();
        if (a.n != n)
            throw ValidationError("style loss: Gram dimension mismatch at layer " +
                                  std::to_string(l));
        const GramMatrix g = gram(*f, l);
        const double norm =
            1.0 / (static_cast<double>(n) * n * static_cast<double>(m) * m);
        double acc = 0.0;
        for (size_t i = 0; i < g.values.size(); ++i) {
            const double d = g.values[i] - a.values[i];
            acc += d * d;
        }
        loss += norm * acc;
        if (grads) {
            // dL/dF = 4 (G - A) F / (N^2 M^2)
            FeatureMap gf(n, f->width, f->height);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    const double c = 4.0 * norm * (g.at(i, j) - a.at(i, j));
                    if (c == 0.0) continue;
                    const double* fj =
                        f->data.data() + static_cast<size_t>(j) * m;
                    double* gi = gf.data.data() + static_cast<size_t>(i) * m;
                    for (int k = 0; k < m; ++k) gi[k] += c * fj[k];
                }
            }
            grads->grads.emplace_back(l, std::move(gf));
        }
    }
    return loss;
}

double temporal_loss_grad(const Image& x, const TemporalTerm& term,
                          TemporalNorm norm, Image* grad) {
    if (!x.same_shape(term.warped) || term.weights.width != x.width ||
        term.weights.height != x.height)
        throw ValidationError("temporal loss: shape mismatch");
    const double inv_d = 1.0 / static_cast<double>(x.data.size());
    double loss = 0.0;
    size_t i = 0;
    for (int y = 0; y < x.height; ++y)
        for (int xx = 0; xx < x.width; ++xx) {
            const double c = term.weights.at(xx, y);
            for (int ch = 0; ch < x.channels; ++ch, ++i) {
                const double d = x.data[i] - term.warped.data[i];
                if (norm == TemporalNorm::squared) {
                    loss += c * d * d;
                    if (grad) grad->data[i] += 2.0 * inv_d * c * d;
                } else {
                    loss += c * std::abs(d);
                    if (grad && d != 0.0)
                        grad->data[i] += inv_d * c * (d > 0.0 ? 1.0 : -1.0);
                }
            }
        }
    return inv_d * loss;
}

StyleContext make_style_context(const Extractor& extractor, const Image& content,
                                const Image& style, const LossWeights& weights) {
    weights.validate();
    StyleContext ctx;
    ctx.content_features = extractor.forward(content, weights.content_layers);
    const Image style_resized =
        resize_bilinear(style, content.width, content.height);
    const FeatureStack s = extractor.forward(style_resized, weights.style_layers);
    for (const auto& [l, fm] : s.layers) ctx.style_grams.emplace(l, gram(fm, l));
    return ctx;
}

LossBreakdown total_loss_grad(const Image& x, const StyleContext& context,
                              const std::vector<TemporalTerm>& temporal_terms,
                              const LossWeights& weights,
                              const Extractor& extractor, Image* grad) {
    LossBreakdown out;
    if (grad) {
        *grad = Image(x.width, x.height, x.channels);
    }

    const bool need_content = weights.alpha != 0.0 && !weights.content_layers.empty();
    const bool need_style = weights.beta != 0.0 && !weights.style_layers.empty();

    if (need_content || need_style) {
        std::vector<int> union_layers;
        if (need_content)
            union_layers.insert(union_layers.end(), weights.content_layers.begin(),
                                weights.content_layers.end());
        if (need_style)
            union_layers.insert(union_layers.end(), weights.style_layers.begin(),
                                weights.style_layers.end());
        const Extractor::Trace tr = extractor.trace(x);
        const FeatureStack F = extractor.layers_from_trace(tr, union_layers);

        LayerGradients cg, sg;
        if (need_content)
            out.content = content_loss_grad(F, context.content_features,
                                            weights.content_layers,
                                            grad ? &cg : nullptr);
        if (need_style)
            out.style = style_loss_grad(F, context.style_grams,
                                        weights.style_layers,
                                        grad ? &sg : nullptr);
        if (grad) {
            // Merge weighted per-layer gradients, then one backward pass.
            std::map<int, FeatureMap> upstream;
            auto add = [&](const LayerGradients& lg, double w) {
                if (w == 0.0) return;
                for (const auto& [l, g] : lg.grads) {
                    auto [it, fresh] = upstream.try_emplace(
                        l, FeatureMap(g.channels, g.width, g.height));
                    for (size_t i = 0; i < g.data.size(); ++i)
                        it->second.data[i] += w * g.data[i];
                }
            };
            add(cg, weights.alpha);
            add(sg, weights.beta);
            if (!upstream.empty()) {
                std::vector<std::pair<int, FeatureMap>> up;
                for (auto& [l, g] : upstream) up.emplace_back(l, std::move(g));
                const Image gx = extractor.backward(tr, up);
                for (size_t i = 0; i < grad->data.size(); ++i)
                    grad->data[i] += gx.data[i];
            }
        }
    }

    out.total = weights.alpha * out.content + weights.beta * out.style;

    if (weights.gamma != 0.0 && !temporal_terms.empty()) {
        Image tgrad;
        if (grad) tgrad = Image(x.width, x.height, x.channels);
        for (const auto& term : temporal_terms)
            out.temporal += temporal_loss_grad(x, term, weights.temporal_norm,
                                               grad ? &tgrad : nullptr);
        if (grad)
            for (size_t i = 0; i < grad->data.size(); ++i)
                grad->data[i] += weights.gamma * tgrad.data[i];
        out.total += weights.gamma * out.temporal;
    }
    return out;
}

}  // namespace vst
