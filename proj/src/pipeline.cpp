#include "vst/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>

namespace vst {

Algorithm algorithm_from_string(const std::string& name) {
    if (name == "independent") return Algorithm::independent;
    if (name == "prev-init") return Algorithm::prev_init;
    if (name == "warped-init") return Algorithm::warped_init;
    if (name == "short-term") return Algorithm::short_term;
    if (name == "long-term") return Algorithm::long_term;
    if (name == "multi-pass") return Algorithm::multi_pass;
    throw ValidationError(
        "unknown algorithm '" + name +
        "' (expected independent, prev-init, warped-init, short-term, "
        "long-term or multi-pass)");
}

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::independent: return "independent";
        case Algorithm::prev_init: return "prev-init";
        case Algorithm::warped_init: return "warped-init";
        case Algorithm::short_term: return "short-term";
        case Algorithm::long_term: return "long-term";
        case Algorithm::multi_pass: return "multi-pass";
    }
    throw Error("invalid algorithm tag");
}

std::string FlowSource::describe(int a, int b) const {
    return "flow pair (" + std::to_string(a) + ", " + std::to_string(b) + ")";
}

void MemoryFlowSource::add(int a, int b, FlowPair pair) {
    pairs_[{a, b}] = std::move(pair);
}

bool MemoryFlowSource::has_pair(int a, int b) const {
    return pairs_.count({a, b}) != 0;
}

FlowPair MemoryFlowSource::pair(int a, int b) const {
    auto it = pairs_.find({a, b});
    if (it == pairs_.end())
        throw ValidationError("missing " + describe(a, b));
    return it->second;
}

DirectoryFlowSource::DirectoryFlowSource(std::string dir, bool allow_compose)
    : dir_(std::move(dir)), allow_compose_(allow_compose) {}

std::string DirectoryFlowSource::forward_name(int a, int b) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "flow_fwd_%04d_%04d.flo", a, b);
    return buf;
}

std::string DirectoryFlowSource::backward_name(int a, int b) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "flow_bwd_%04d_%04d.flo", a, b);
    return buf;
}

std::string DirectoryFlowSource::path_of(const std::string& name) const {
    return (std::filesystem::path(dir_) / name).string();
}

bool DirectoryFlowSource::have_adjacent_chain(int a, int b) const {
    for (int t = a; t < b; ++t) {
        if (!std::filesystem::exists(path_of(forward_name(t, t + 1))) ||
            !std::filesystem::exists(path_of(backward_name(t, t + 1))))
            return false;
    }
    return true;
}

bool DirectoryFlowSource::has_pair(int a, int b) const {
    if (std::filesystem::exists(path_of(forward_name(a, b))) &&
        std::filesystem::exists(path_of(backward_name(a, b))))
        return true;
    return allow_compose_ && b - a > 1 && have_adjacent_chain(a, b);
}

FlowPair DirectoryFlowSource::pair(int a, int b) const {
    const std::string fwd = path_of(forward_name(a, b));
    const std::string bwd = path_of(backward_name(a, b));
    if (std::filesystem::exists(fwd) && std::filesystem::exists(bwd))
        return {read_flo(fwd), read_flo(bwd)};
    if (allow_compose_ && b - a > 1 && have_adjacent_chain(a, b)) {
        FlowField f = read_flo(path_of(forward_name(a, a + 1)));
        for (int t = a + 1; t < b; ++t)
            f = compose_flows(f, read_flo(path_of(forward_name(t, t + 1))));
        FlowField r = read_flo(path_of(backward_name(b - 1, b)));
        for (int t = b - 1; t > a; --t)
            r = compose_flows(r, read_flo(path_of(backward_name(t - 1, t))));
        return {std::move(f), std::move(r)};
    }
    throw ValidationError("missing " + describe(a, b));
}

std::string DirectoryFlowSource::describe(int a, int b) const {
    std::string s = path_of(forward_name(a, b)) + " and " +
                    path_of(backward_name(a, b));
    if (allow_compose_ && b - a > 1)
        s += " (or the complete adjacent chain between " + std::to_string(a) +
             " and " + std::to_string(b) + ")";
    return s;
}

void MultiPassSettings::validate() const {
    if (passes < 1) throw ValidationError("multi-pass: passes must be >= 1");
    if (iterations_per_pass < 0)
        throw ValidationError("multi-pass: iterations per pass must be >= 0");
    if (delta < 0.0 || delta > 1.0)
        throw ValidationError("multi-pass: delta must be in [0,1]");
    if (temporal_activation_pass < 0)
        throw ValidationError(
            "multi-pass: temporal activation pass must be >= 0");
}

namespace {

struct FrameObjective : Objective {
    const StyleContext* ctx = nullptr;
    const Extractor* ex = nullptr;
    const LossWeights* weights = nullptr;
    const std::vector<TemporalTerm>* terms = nullptr;

    LossBreakdown evaluate(const Image& x, Image* grad) const override {
        return total_loss_grad(x, *ctx, *terms, *weights, *ex, grad);
    }
};

void validate_inputs(const std::vector<Image>& frames, const Image& style,
                     const StylizeSettings& s, const Extractor& ex) {
    if (frames.empty())
        throw ValidationError("pipeline: frame count must be >= 1");
    for (size_t k = 1; k < frames.size(); ++k) {
        if (!frames[k].same_shape(frames[0]))
            throw ValidationError("pipeline: frame " + std::to_string(k + 1) +
                                  " shape differs from frame 1");
    }
    if (style.width < 1 || style.height < 1)
        throw ValidationError("pipeline: style image is empty");
    if (style.channels != frames[0].channels)
        throw ValidationError("pipeline: style channel count " +
                              std::to_string(style.channels) +
                              " != frame channel count " +
                              std::to_string(frames[0].channels));
    s.weights.validate();
    s.solver.validate();
    if (s.init_stddev < 0.0)
        throw ValidationError("pipeline: init stddev must be >= 0");
    if (s.threads < 1)
        throw ValidationError("pipeline: threads must be >= 1");
    if (frames[0].channels != ex.config().stages.front().in_channels)
        throw ValidationError(
            "pipeline: frames have " + std::to_string(frames[0].channels) +
            " channels, extractor expects " +
            std::to_string(ex.config().stages.front().in_channels));
    const int pf = ex.pooling_factor();
    if (frames[0].width % pf != 0 || frames[0].height % pf != 0)
        throw ValidationError(
            "pipeline: frame size " + std::to_string(frames[0].width) + "x" +
            std::to_string(frames[0].height) +
            " is not divisible by the extractor pooling factor " +
            std::to_string(pf) + "; pad to " +
            std::to_string((frames[0].width + pf - 1) / pf * pf) + "x" +
            std::to_string((frames[0].height + pf - 1) / pf * pf));
}

void require_pairs(const FlowSource& flows,
                   const std::vector<std::pair<int, int>>& pairs) {
    std::string missing;
    for (auto [a, b] : pairs)
        if (!flows.has_pair(a, b)) missing += "\n  " + flows.describe(a, b);
    if (!missing.empty())
        throw ValidationError("pipeline: missing flow data:" + missing);
}

void check_pair_shape(const FlowPair& p, const Image& frame, int a, int b) {
    if (p.forward.width != frame.width || p.forward.height != frame.height ||
        p.backward.width != frame.width || p.backward.height != frame.height)
        throw ValidationError("pipeline: flow pair (" + std::to_string(a) +
                              ", " + std::to_string(b) +
                              ") does not match the frame size");
}

SolverConfig frame_solver(const StylizeSettings& s, size_t frame_index) {
    SolverConfig cfg = s.solver;
    if (frame_index > 0 && s.relax_later_frames)
        cfg.convergence_threshold = s.relaxed_threshold;
    return cfg;
}

size_t check_resume_prefix(const std::vector<Image>& frames,
                           const std::vector<Image>* prefix) {
    if (!prefix) return 0;
    if (prefix->size() > frames.size())
        throw ValidationError(
            "pipeline: resume prefix is longer than the sequence");
    for (size_t k = 0; k < prefix->size(); ++k)
        if (!(*prefix)[k].same_shape(frames[k]))
            throw ValidationError("pipeline: resumed frame " +
                                  std::to_string(k + 1) +
                                  " does not match the input frame shape");
    return prefix->size();
}

void take_resumed(SequenceResult& out, const std::vector<Image>& prefix,
                  size_t k) {
    out.frames.push_back(prefix[k]);
    out.reports.emplace_back().termination = "resumed";
    out.temporal_weights.emplace_back();
}

Image noise_init(const Image& like, const StylizeSettings& s, size_t k) {
    Rng rng(derive_seed(s.seed, static_cast<uint64_t>(k)));
    return gaussian_init(like.width, like.height, like.channels, rng,
                         s.init_mean, s.init_stddev);
}

Image solve_frame(const Image& content, const Image& style,
                  const Extractor& ex, const StylizeSettings& s,
                  const std::vector<TemporalTerm>& terms, const Image& init,
                  const SolverConfig& cfg, SolveReport* report) {
    StyleContext ctx = make_style_context(ex, content, style, s.weights);
    FrameObjective obj;
    obj.ctx = &ctx;
    obj.ex = &ex;
    obj.weights = &s.weights;
    obj.terms = &terms;
    auto [img, rep] = minimize(obj, init, cfg);
    if (report) *report = std::move(rep);
    return img;
}

/// Runs fn(k) for k in [0, n) on up to `threads` workers; any exception is
/// rethrown on the caller thread after all workers finish.
template <typename Fn>
void parallel_frames(size_t n, int threads, Fn&& fn) {
    const int workers = std::min<int>(threads, static_cast<int>(n));
    if (workers <= 1) {
        for (size_t k = 0; k < n; ++k) fn(k);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const size_t k = next.fetch_add(1);
                if (k >= n) return;
                try {
                    fn(k);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!err) err = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace

Image stylize_single(const Image& content, const Image& style,
                     const Image& init, const StylizeSettings& settings,
                     SolveReport* report) {
    const Extractor ex = Extractor::build(settings.extractor);
    validate_inputs({content}, style, settings, ex);
    if (!init.same_shape(content))
        throw ValidationError("pipeline: init shape differs from content");
    static const std::vector<TemporalTerm> no_terms;
    return solve_frame(content, style, ex, settings, no_terms, init,
                       settings.solver, report);
}

SequenceResult run_short_term(const std::vector<Image>& frames,
                              const Image& style, Algorithm tag,
                              const FlowSource& flows,
                              const StylizeSettings& settings,
                              const std::vector<Image>* resume_prefix) {
    if (tag != Algorithm::independent && tag != Algorithm::prev_init &&
        tag != Algorithm::warped_init && tag != Algorithm::short_term)
        throw ValidationError("run_short_term: unsupported tag " +
                              to_string(tag));
    const Extractor ex = Extractor::build(settings.extractor);
    validate_inputs(frames, style, settings, ex);
    const size_t done = check_resume_prefix(frames, resume_prefix);

    const bool needs_flows =
        (tag == Algorithm::warped_init || tag == Algorithm::short_term) &&
        frames.size() > 1;
    if (needs_flows) {
        std::vector<std::pair<int, int>> needed;
        for (size_t k = 1; k < frames.size(); ++k)
            needed.emplace_back(static_cast<int>(k), static_cast<int>(k) + 1);
        require_pairs(flows, needed);
    }

    SequenceResult out;
    out.weights_used = settings.weights;
    if (tag == Algorithm::independent) {
        // no cross-frame dependency: frames may run concurrently
        const size_t n = frames.size();
        out.frames.resize(n);
        out.reports.resize(n);
        out.temporal_weights.resize(n);
        for (size_t k = 0; k < done; ++k) {
            out.frames[k] = (*resume_prefix)[k];
            out.reports[k].termination = "resumed";
        }
        parallel_frames(n - done, settings.threads, [&](size_t i) {
            const size_t k = done + i;
            out.frames[k] = solve_frame(frames[k], style, ex, settings, {},
                                        noise_init(frames[k], settings, k),
                                        frame_solver(settings, k),
                                        &out.reports[k]);
        });
        return out;
    }

    for (size_t k = 0; k < frames.size(); ++k) {
        if (k < done) {
            take_resumed(out, *resume_prefix, k);
            continue;
        }
        Image init;
        std::vector<TemporalTerm> terms;
        std::vector<std::pair<int, WeightMask>> used;
        if (k == 0) {
            init = noise_init(frames[k], settings, k);
        } else if (tag == Algorithm::prev_init) {
            init = out.frames.back();
        } else {
            const int a = static_cast<int>(k), b = static_cast<int>(k) + 1;
            FlowPair p = flows.pair(a, b);
            check_pair_shape(p, frames[k], a, b);
            init = warp_image(out.frames.back(), p.backward);
            if (tag == Algorithm::short_term) {
                WeightMask c = consistency_weights(p);
                terms.push_back({init, c});
                used.emplace_back(1, std::move(c));
            }
        }
        out.frames.push_back(solve_frame(frames[k], style, ex, settings,
                                         terms, init,
                                         frame_solver(settings, k),
                                         &out.reports.emplace_back()));
        out.temporal_weights.push_back(std::move(used));
    }
    return out;
}

SequenceResult run_long_term(const std::vector<Image>& frames,
                             const Image& style, const FlowSource& flows,
                             const StylizeSettings& settings,
                             const std::vector<Image>* resume_prefix) {
    const Extractor ex = Extractor::build(settings.extractor);
    validate_inputs(frames, style, settings, ex);
    const size_t done = check_resume_prefix(frames, resume_prefix);
    const std::vector<int>& offsets = settings.weights.long_term_offsets;
    if (offsets.empty())
        throw ValidationError("run_long_term: offset set must be non-empty");

    std::vector<std::pair<int, int>> needed;
    for (size_t k = 1; k < frames.size(); ++k) {
        const int b = static_cast<int>(k) + 1;
        if (b - 1 >= 1) needed.emplace_back(b - 1, b);  // init warp
        for (int j : offsets)
            if (b - j >= 1 && j != 1) needed.emplace_back(b - j, b);
    }
    std::sort(needed.begin(), needed.end());
    needed.erase(std::unique(needed.begin(), needed.end()), needed.end());
    require_pairs(flows, needed);

    SequenceResult out;
    out.weights_used = settings.weights;
    for (size_t k = 0; k < frames.size(); ++k) {
        if (k < done) {
            take_resumed(out, *resume_prefix, k);
            continue;
        }
        Image init;
        std::vector<TemporalTerm> terms;
        std::vector<std::pair<int, WeightMask>> used;
        if (k == 0) {
            init = noise_init(frames[k], settings, k);
        } else {
            const int b = static_cast<int>(k) + 1;
            // short-term consistency per in-range offset, ascending
            std::vector<std::pair<int, WeightMask>> short_w;
            std::vector<std::pair<int, Image>> warped;
            for (int j : offsets) {
                if (b - j < 1) continue;
                FlowPair p = flows.pair(b - j, b);
                check_pair_shape(p, frames[k], b - j, b);
                short_w.emplace_back(j, consistency_weights(p));
                warped.emplace_back(
                    j, warp_image(out.frames[k - j], p.backward));
                if (j == 1) init = warped.back().second;
            }
            if (init.data.empty()) {
                // offset 1 not in range/set: still warp the previous frame
                FlowPair p = flows.pair(b - 1, b);
                check_pair_shape(p, frames[k], b - 1, b);
                init = warp_image(out.frames.back(), p.backward);
            }
            for (auto& [j, w] : warped) {
                WeightMask c = long_term_weights(short_w, j);
                terms.push_back({std::move(w), c});
                used.emplace_back(j, std::move(c));
            }
        }
        out.frames.push_back(solve_frame(frames[k], style, ex, settings,
                                         terms, init,
                                         frame_solver(settings, k),
                                         &out.reports.emplace_back()));
        out.temporal_weights.push_back(std::move(used));
    }
    return out;
}

SequenceResult run_multi_pass(const std::vector<Image>& frames,
                              const Image& style, const FlowSource& flows,
                              const StylizeSettings& settings,
                              const MultiPassSettings& mp) {
    const Extractor ex = Extractor::build(settings.extractor);
    validate_inputs(frames, style, settings, ex);
    mp.validate();

    const size_t n = frames.size();
    if (mp.passes > 1 && n > 1) {
        std::vector<std::pair<int, int>> needed;
        for (size_t k = 1; k < n; ++k)
            needed.emplace_back(static_cast<int>(k), static_cast<int>(k) + 1);
        require_pairs(flows, needed);
    }

    SolverConfig pass_cfg = settings.solver;
    pass_cfg.max_iterations = mp.iterations_per_pass;
    pass_cfg.check_convergence = false;  // passes are fixed-length

    SequenceResult out;
    out.weights_used = settings.weights;
    out.frames.resize(n);
    out.reports.resize(n);
    out.temporal_weights.resize(n);

    // pass 0: independent solves from noise
    out.pass_schedule.push_back("independent");
    parallel_frames(n, settings.threads, [&](size_t k) {
        out.frames[k] = solve_frame(frames[k], style, ex, settings, {},
                                    noise_init(frames[k], settings, k),
                                    pass_cfg, &out.reports[k]);
    });

    for (int pass = 1; pass < mp.passes; ++pass) {
        const bool forward = pass % 2 == 0;
        out.pass_schedule.push_back(forward ? "forward" : "backward");
        const std::vector<Image> prev = out.frames;  // results of pass-1

        for (size_t step = 0; step < n; ++step) {
            const size_t k = forward ? step : n - 1 - step;
            Image init;
            std::vector<TemporalTerm> terms;
            std::vector<std::pair<int, WeightMask>> used;
            const bool first_in_sweep = step == 0;
            if (first_in_sweep) {
                init = prev[k];
            } else {
                const size_t nk = forward ? k - 1 : k + 1;  // sweep neighbor
                const int a = static_cast<int>(std::min(k, nk)) + 1;
                const int b = static_cast<int>(std::max(k, nk)) + 1;
                FlowPair p = flows.pair(a, b);
                check_pair_shape(p, frames[k], a, b);
                Image warped;
                WeightMask c;
                if (forward) {
                    warped = warp_image(out.frames[nk], p.backward);
                    c = consistency_weights(p);
                } else {
                    warped = warp_image(out.frames[nk], p.forward);
                    FlowPair swapped{p.backward, p.forward};
                    c = consistency_weights(swapped);
                }
                init = blend(warped, prev[k], c, mp.delta);
                if (pass >= mp.temporal_activation_pass) {
                    terms.push_back({std::move(warped), c});
                    used.emplace_back(forward ? 1 : -1, std::move(c));
                }
            }
            out.frames[k] = solve_frame(frames[k], style, ex, settings,
                                        terms, init, pass_cfg,
                                        &out.reports[k]);
            out.temporal_weights[k] = std::move(used);
        }
    }
    return out;
}

SequenceResult run_sequence(const std::vector<Image>& frames,
                            const Image& style, Algorithm algo,
                            const FlowSource& flows,
                            const StylizeSettings& settings,
                            const MultiPassSettings& mp,
                            const std::vector<Image>* resume_prefix) {
    switch (algo) {
        case Algorithm::independent:
        case Algorithm::prev_init:
        case Algorithm::warped_init:
        case Algorithm::short_term:
            return run_short_term(frames, style, algo, flows, settings,
                                  resume_prefix);
        case Algorithm::long_term:
            return run_long_term(frames, style, flows, settings,
                                 resume_prefix);
        case Algorithm::multi_pass:
            if (resume_prefix && !resume_prefix->empty())
                throw ValidationError(
                    "pipeline: multi-pass cannot resume from partial "
                    "outputs");
            return run_multi_pass(frames, style, flows, settings, mp);
    }
    throw Error("invalid algorithm tag");
}

LossWeights weights_for_resolution(int width, int height) {
    struct Anchor {
        long pixels;
        double beta, gamma;
    };
    static const Anchor anchors[] = {
        {350L * 450L, 20.0, 200.0},
        {768L * 432L, 40.0, 200.0},
        {1024L * 436L, 100.0, 400.0},
    };
    const long pixels = static_cast<long>(width) * height;
    const Anchor* best = &anchors[0];
    for (const Anchor& a : anchors)
        if (std::labs(pixels - a.pixels) < std::labs(pixels - best->pixels))
            best = &a;
    LossWeights w;
    w.alpha = 1.0;
    w.beta = best->beta;
    w.gamma = best->gamma;
    return w;
}

LossWeights benchmark_weights() {
    LossWeights w;
    w.alpha = 1.0;
    w.beta = 100.0;
    w.gamma = 400.0;
    return w;
}

}  // namespace vst
