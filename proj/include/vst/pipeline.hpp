#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vst/features.hpp"
#include "vst/flow.hpp"
#include "vst/image.hpp"
#include "vst/losses.hpp"
#include "vst/solver.hpp"

namespace vst {

/// Sequence processing modes, ordered roughly by temporal awareness.
///  - independent: every frame from fresh noise, no temporal term
///  - prev_init:   previous stylized frame as init, no temporal term
///  - warped_init: warped previous stylized frame as init, no temporal term
///  - short_term:  warped init plus the consistency-weighted temporal term
///  - long_term:   short_term generalized to several past offsets
///  - multi_pass:  alternating forward/backward sweeps with blended inits
enum class Algorithm {
    independent,
    prev_init,
    warped_init,
    short_term,
    long_term,
    multi_pass,
};

Algorithm algorithm_from_string(const std::string& name);
std::string to_string(Algorithm a);

/// Supplies flow pairs between frames. Frames are 1-based; a < b. The
/// returned pair's forward field lives on frame a's grid and points into
/// frame b, the backward field lives on frame b's grid and points into a.
class FlowSource {
  public:
    virtual ~FlowSource() = default;
    virtual bool has_pair(int a, int b) const = 0;
    virtual FlowPair pair(int a, int b) const = 0;
    /// Names the missing data in validation errors.
    virtual std::string describe(int a, int b) const;
};

/// In-memory source, used by tests and the synthetic-scene tooling.
class MemoryFlowSource : public FlowSource {
  public:
    void add(int a, int b, FlowPair pair);
    bool has_pair(int a, int b) const override;
    FlowPair pair(int a, int b) const override;

  private:
    std::map<std::pair<int, int>, FlowPair> pairs_;
};

/// Disk-backed source reading flow_fwd_%04d_%04d.flo and
/// flow_bwd_%04d_%04d.flo from one directory. Pairs spanning more than one
/// frame are read from their own files when present; otherwise (and if
/// allow_compose is set) they are composed from the chain of adjacent
/// fields as a documented fallback.
class DirectoryFlowSource : public FlowSource {
  public:
    explicit DirectoryFlowSource(std::string dir, bool allow_compose = true);
    bool has_pair(int a, int b) const override;
    FlowPair pair(int a, int b) const override;
    std::string describe(int a, int b) const override;

    static std::string forward_name(int a, int b);
    static std::string backward_name(int a, int b);

  private:
    std::string path_of(const std::string& name) const;
    bool have_adjacent_chain(int a, int b) const;

    std::string dir_;
    bool allow_compose_ = true;
};

/// Everything a single solve needs besides the images themselves.
struct StylizeSettings {
    LossWeights weights;
    SolverConfig solver;
    ExtractorConfig extractor = ExtractorConfig::compact_default();
    uint64_t seed = 20177;
    double init_mean = 0.5;
    double init_stddev = 0.1;
    /// When set, frames after the first stop at relaxed_threshold instead
    /// of solver.convergence_threshold (the first frame stays strict).
    bool relax_later_frames = false;
    double relaxed_threshold = 1e-3;
    /// Worker cap for the phases that parallelize (independent frames).
    int threads = 1;
};

struct MultiPassSettings {
    int passes = 10;
    int iterations_per_pass = 100;
    double delta = 0.5;
    /// First pass index whose solves include the temporal term. Pass 0 is
    /// the independent pass; blended passes alternate direction, forward
    /// at even indices.
    int temporal_activation_pass = 4;

    void validate() const;
};

struct SequenceResult {
    std::vector<Image> frames;
    /// One report per frame; for multi_pass, the frame's final-pass solve.
    std::vector<SolveReport> reports;
    /// Temporal-term weights used per frame as (offset, mask); empty for
    /// modes/frames without a temporal term. For multi_pass the offset is
    /// +1/-1 toward the neighbor of the last pass that solved the frame.
    std::vector<std::vector<std::pair<int, WeightMask>>> temporal_weights;
    /// multi_pass only: one entry per pass, "independent", "forward" or
    /// "backward".
    std::vector<std::string> pass_schedule;
    LossWeights weights_used;
};

/// Single-image transfer: minimizes the content+style objective starting
/// from init. Inputs outside [0,1] are clamped by the solver.
Image stylize_single(const Image& content, const Image& style,
                     const Image& init, const StylizeSettings& settings,
                     SolveReport* report = nullptr);

/// Sequential processing under one of the four per-frame tags
/// (independent, prev_init, warped_init, short_term). Frame k's noise is
/// seeded with derive_seed(settings.seed, k), so runs are reproducible and
/// tags differing only in initialization share their frame-1 result.
/// resume_prefix, when given, holds already-stylized results for the first
/// frames; those are passed through with termination "resumed" instead of
/// being solved again.
SequenceResult run_short_term(const std::vector<Image>& frames,
                              const Image& style, Algorithm tag,
                              const FlowSource& flows,
                              const StylizeSettings& settings,
                              const std::vector<Image>* resume_prefix = nullptr);

/// Short-term processing with one temporal term per offset j in
/// settings.weights.long_term_offsets (falling back to the plain warped
/// init for frames with no in-range offset). Offsets {1} reproduce
/// run_short_term(short_term) exactly.
SequenceResult run_long_term(const std::vector<Image>& frames,
                             const Image& style, const FlowSource& flows,
                             const StylizeSettings& settings,
                             const std::vector<Image>* resume_prefix = nullptr);

/// Alternating-direction refinement. Pass 0 solves every frame
/// independently from noise; pass j >= 1 sweeps forward (even j) or
/// backward (odd j), initializing each frame with
///   delta*c*warp(neighbor of this pass) + ((1-delta) + delta*(1-c))*own
/// previous-pass result, where c is the consistency weight toward that
/// neighbor. Every solve runs exactly iterations_per_pass iterations; the
/// temporal term joins at temporal_activation_pass.
SequenceResult run_multi_pass(const std::vector<Image>& frames,
                              const Image& style, const FlowSource& flows,
                              const StylizeSettings& settings,
                              const MultiPassSettings& mp);

/// Dispatch on the algorithm tag. resume_prefix applies to the sequential
/// modes only (multi-pass state cannot be reconstructed from final frames).
SequenceResult run_sequence(const std::vector<Image>& frames,
                            const Image& style, Algorithm algo,
                            const FlowSource& flows,
                            const StylizeSettings& settings,
                            const MultiPassSettings& mp = {},
                            const std::vector<Image>* resume_prefix = nullptr);

/// Default (alpha, beta, gamma) by nearest declared resolution anchor
/// (by absolute pixel-count distance): 350x450 -> (1, 20, 200),
/// 768x432 -> (1, 40, 200), 1024x436 -> (1, 100, 400).
LossWeights weights_for_resolution(int width, int height);

/// The evaluation preset (1, 100, 400) used for benchmark comparisons.
LossWeights benchmark_weights();

}  // namespace vst
