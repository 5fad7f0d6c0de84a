#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "vst/image.hpp"
#include "vst/losses.hpp"

namespace vst {

enum class SolveMethod { quasi_newton, adaptive_first_order };

/// Optimizer settings. The stopping rule declares convergence when the
/// relative spread of the loss over the trailing window
/// (max - min) / max(|max|, |min|) is at most convergence_threshold;
/// 1e-4 is the strict criterion, 1e-3 the relaxed one.
struct SolverConfig {
    int max_iterations = 1000;
    int convergence_window = 50;
    double convergence_threshold = 1e-4;
    bool check_convergence = true;
    SolveMethod method = SolveMethod::quasi_newton;

    // quasi-newton
    int history = 8;
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    int max_line_search = 30;

    // adaptive first-order
    double fo_step = 0.02;
    double fo_beta1 = 0.9;
    double fo_beta2 = 0.999;
    double fo_eps = 1e-8;

    void validate() const;
};

/// Outcome of one minimization.
struct SolveReport {
    int iterations = 0;
    bool converged = false;
    std::string termination;  // "converged" or "max_iterations"
    LossBreakdown final_loss;
    std::vector<LossBreakdown> trace;  // [0] is the initial loss

    /// Line-oriented log: one row per recorded iterate with total and
    /// component losses.
    void write_log(std::ostream& os) const;
};

/// Loss-and-gradient oracle over images. evaluate() may be called with a
/// null gradient for value-only probes (line search).
class Objective {
public:
    virtual ~Objective() = default;
    virtual LossBreakdown evaluate(const Image& x, Image* grad) const = 0;
};

/// Adapter for lambda-based objectives (tests, simple callers).
class FunctionObjective final : public Objective {
public:
    using Fn = LossBreakdown (*)(const Image&, Image*, void*);
    FunctionObjective(Fn fn, void* ctx) : fn_(fn), ctx_(ctx) {}
    LossBreakdown evaluate(const Image& x, Image* grad) const override {
        return fn_(x, grad, ctx_);
    }

private:
    Fn fn_;
    void* ctx_;
};

/// Minimizes the objective over the image, starting from init. Iterates
/// are clamped to [0,1] after every update. Terminates on the trailing
/// window criterion or at max_iterations. Throws Error (with the
/// iteration index) if the objective produces a non-finite loss or
/// gradient.
std::pair<Image, SolveReport> minimize(const Objective& objective,
                                       const Image& init,
                                       const SolverConfig& config);

}  // namespace vst
