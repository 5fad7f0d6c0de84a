#include "vst/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>

namespace vst {

void SolverConfig::validate() const {
    if (max_iterations < 0)
        throw ValidationError("solver: max_iterations must be >= 0");
    if (convergence_window < 1)
        throw ValidationError("solver: convergence_window must be >= 1");
    if (convergence_threshold <= 0.0)
        throw ValidationError("solver: convergence_threshold must be > 0");
    if (history < 1) throw ValidationError("solver: history must be >= 1");
    if (backtrack <= 0.0 || backtrack >= 1.0)
        throw ValidationError("solver: backtrack factor must be in (0,1)");
    if (armijo_c <= 0.0 || armijo_c >= 1.0)
        throw ValidationError("solver: armijo_c must be in (0,1)");
}

void SolveReport::write_log(std::ostream& os) const {
    os << "# iter total content style temporal\n";
    char buf[160];
    for (size_t k = 0; k < trace.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%zu %.12e %.12e %.12e %.12e\n", k,
                      trace[k].total, trace[k].content, trace[k].style,
                      trace[k].temporal);
        os << buf;
    }
    os << "# iterations " << iterations << "\n";
    os << "# termination " << termination << "\n";
}

namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double inf_norm(const Vec& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

bool all_finite(const Vec& a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

void clamp_image(Image& img) {
    for (auto& v : img.data) v = clamp01(v);
}

struct Correction {
    Vec s, y;
    double rho;
};

// Two-loop recursion; returns the quasi-Newton descent direction.
Vec lbfgs_direction(const Vec& grad, const std::deque<Correction>& hist) {
    Vec q = grad;
    std::vector<double> alpha(hist.size());
    for (size_t i = hist.size(); i-- > 0;) {
        alpha[i] = hist[i].rho * dot(hist[i].s, q);
        for (size_t k = 0; k < q.size(); ++k) q[k] -= alpha[i] * hist[i].y[k];
    }
    if (!hist.empty()) {
        const Correction& last = hist.back();
        const double yy = dot(last.y, last.y);
        const double scale = yy > 0.0 ? 1.0 / (last.rho * yy) : 1.0;
        for (auto& v : q) v *= scale;
    }
    for (size_t i = 0; i < hist.size(); ++i) {
        const double beta = hist[i].rho * dot(hist[i].y, q);
        for (size_t k = 0; k < q.size(); ++k)
            q[k] += (alpha[i] - beta) * hist[i].s[k];
    }
    for (auto& v : q) v = -v;
    return q;
}

// Relative spread of the last (window+1) recorded losses.
bool window_converged(const std::vector<LossBreakdown>& trace, int window,
                      double threshold) {
    if (static_cast<int>(trace.size()) < window + 1) return false;
    double lo = trace.back().total, hi = trace.back().total;
    for (size_t k = trace.size() - window - 1; k < trace.size(); ++k) {
        lo = std::min(lo, trace[k].total);
        hi = std::max(hi, trace[k].total);
    }
    const double denom = std::max(std::abs(lo), std::abs(hi));
    if (denom == 0.0) return true;
    return (hi - lo) / denom <= threshold;
}

[[noreturn]] void fail_nonfinite(const char* what, int iteration) {
    throw Error(std::string("solver: non-finite ") + what + " at iteration " +
                std::to_string(iteration));
}

}  // namespace

std::pair<Image, SolveReport> minimize(const Objective& objective,
                                       const Image& init,
                                       const SolverConfig& config) {
    config.validate();
    Image x = init;
    clamp_image(x);

    Image grad(x.width, x.height, x.channels);
    LossBreakdown fb = objective.evaluate(x, &grad);
    if (!std::isfinite(fb.total)) fail_nonfinite("loss", 0);
    if (!all_finite(grad.data)) fail_nonfinite("gradient", 0);

    SolveReport report;
    report.trace.push_back(fb);

    std::deque<Correction> history;
    Vec adam_m, adam_v;
    if (config.method == SolveMethod::adaptive_first_order) {
        adam_m.assign(x.data.size(), 0.0);
        adam_v.assign(x.data.size(), 0.0);
    }

    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        bool moved = false;

        if (config.method == SolveMethod::quasi_newton) {
            Vec dir = history.empty() ? Vec() : lbfgs_direction(grad.data, history);
            bool steepest = history.empty();
            if (steepest) {
                dir = grad.data;
                for (auto& v : dir) v = -v;
            }
            double dd = dot(grad.data, dir);
            if (dd >= 0.0 && !steepest) {
                // not a descent direction; drop the memory and restart
                history.clear();
                dir = grad.data;
                for (auto& v : dir) v = -v;
                steepest = true;
                dd = dot(grad.data, dir);
            }

            const double gmax = inf_norm(grad.data);
            if (gmax > 0.0 && dd < 0.0) {
                double t = steepest ? std::min(1.0, 1.0 / gmax) : 1.0;
                Image x_new(x.width, x.height, x.channels);
                Image g_new(x.width, x.height, x.channels);
                LossBreakdown fb_new;
                bool have_grad_new = false;

                for (int ls = 0; ls < config.max_line_search; ++ls) {
                    for (size_t i = 0; i < x.data.size(); ++i)
                        x_new.data[i] = clamp01(x.data[i] + t * dir[i]);
                    const bool with_grad = ls == 0;
                    fb_new = objective.evaluate(x_new, with_grad ? &g_new : nullptr);
                    if (!std::isfinite(fb_new.total)) fail_nonfinite("loss", iter);
                    if (fb_new.total <= fb.total + config.armijo_c * t * dd) {
                        have_grad_new = with_grad;
                        moved = true;
                        break;
                    }
                    t *= config.backtrack;
                }
                if (moved) {
                    if (!have_grad_new) {
                        fb_new = objective.evaluate(x_new, &g_new);
                        if (!std::isfinite(fb_new.total))
                            fail_nonfinite("loss", iter);
                    }
                    if (!all_finite(g_new.data)) fail_nonfinite("gradient", iter);

                    Correction c;
                    c.s.resize(x.data.size());
                    c.y.resize(x.data.size());
                    for (size_t i = 0; i < x.data.size(); ++i) {
                        c.s[i] = x_new.data[i] - x.data[i];
                        c.y[i] = g_new.data[i] - grad.data[i];
                    }
                    const double sy = dot(c.s, c.y);
                    const double ss = dot(c.s, c.s), yy = dot(c.y, c.y);
                    if (sy > 1e-10 * std::sqrt(ss * yy) && sy > 0.0) {
                        c.rho = 1.0 / sy;
                        history.push_back(std::move(c));
                        if (static_cast<int>(history.size()) > config.history)
                            history.pop_front();
                    }
                    x = std::move(x_new);
                    grad = std::move(g_new);
                    fb = fb_new;
                } else if (!steepest) {
                    history.clear();
                }
            }
            // If no progress was possible the loss is recorded unchanged;
            // the window criterion then terminates the run.
        } else {
            // adaptive first-order update (Adam), tolerant of the
            // absolute-error subgradient
            for (size_t i = 0; i < x.data.size(); ++i) {
                adam_m[i] = config.fo_beta1 * adam_m[i] +
                            (1.0 - config.fo_beta1) * grad.data[i];
                adam_v[i] = config.fo_beta2 * adam_v[i] +
                            (1.0 - config.fo_beta2) * grad.data[i] * grad.data[i];
                const double mhat =
                    adam_m[i] / (1.0 - std::pow(config.fo_beta1, iter));
                const double vhat =
                    adam_v[i] / (1.0 - std::pow(config.fo_beta2, iter));
                x.data[i] = clamp01(x.data[i] - config.fo_step * mhat /
                                                    (std::sqrt(vhat) + config.fo_eps));
            }
            fb = objective.evaluate(x, &grad);
            if (!std::isfinite(fb.total)) fail_nonfinite("loss", iter);
            if (!all_finite(grad.data)) fail_nonfinite("gradient", iter);
            moved = true;
        }
        (void)moved;

        report.trace.push_back(fb);
        report.iterations = iter;
        if (config.check_convergence &&
            window_converged(report.trace, config.convergence_window,
                             config.convergence_threshold)) {
            report.converged = true;
            break;
        }
    }

    report.termination = report.converged ? "converged" : "max_iterations";
    report.final_loss = fb;
    return {std::move(x), std::move(report)};
}

}  // namespace vst
