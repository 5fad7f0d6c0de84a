#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vst/flow.hpp"
#include "vst/image.hpp"

namespace vst {

// ---- Warp-back consistency metric ----

struct PairScore {
    int earlier = 0;  // 1-based frame index i-1
    int later = 0;    // 1-based frame index i
    bool skipped = false;  // every component excluded by the mask
    double mse = 0.0;
    long included = 0;  // component count entering the mean
};

struct SequenceScore {
    std::vector<PairScore> pairs;
    int evaluated_pairs = 0;
    int skipped_pairs = 0;
    /// Unweighted mean of the evaluated pair MSEs; meaningful only when
    /// evaluated_pairs > 0 (mean_defined).
    double mean = 0.0;
    bool mean_defined = false;
};

/// Consistency error of a stylized sequence against ground truth: for each
/// adjacent pair, frame i is warped back onto frame i-1's grid with
/// flows[i-1] (the field on the earlier grid pointing into the later
/// frame) and compared with frame i-1 over the components whose pixel is
/// NOT set in exclude[i-1] (the mask of pixels without a correspondence in
/// frame i, e.g. about to be occluded). Masks are replicated across
/// channels; each pair divides by its own included-component count.
/// A fully excluded pair is skipped and flagged, not averaged.
SequenceScore warp_back_mse(const std::vector<Image>& stylized,
                            const std::vector<FlowField>& flows,
                            const std::vector<BoolMask>& exclude);

/// Mean over per-style sequence means (uniform over styles); styles whose
/// mean is undefined are skipped.
double aggregate_styles(const std::vector<SequenceScore>& per_style);

// ---- Synthetic ground-truth scenes ----

/// Textured rectangles translating over a static textured background.
/// Later rectangles composite on top. Motions are per frame; fractional
/// values give subpixel motion (frames are then rendered by bilinear
/// texture sampling, while flows and masks stay analytic).
struct SynthSceneConfig {
    struct Rect {
        double x0 = 0.0, y0 = 0.0;  // top-left corner at frame 1
        int w = 0, h = 0;
        double dx = 0.0, dy = 0.0;  // translation per frame step
    };

    uint64_t seed = 7;
    int width = 64;
    int height = 64;
    int frames = 5;
    /// Smoothing passes applied to the noise textures (0 = raw noise).
    int texture_smoothing = 2;
    std::vector<Rect> rects;

    /// 64x64, 5 frames, one 20x16 rectangle moving (+3, +1) per frame.
    static SynthSceneConfig default_scene();

    /// Rejects configurations where a rectangle leaves the canvas on any
    /// frame, and degenerate sizes/counts.
    void validate() const;
};

struct SynthScene {
    std::vector<Image> frames;  // index t holds frame t+1
    /// One entry per adjacent pair (t+1, t+2):
    std::vector<FlowField> forward;    // on the earlier grid, exact
    std::vector<FlowField> backward;   // on the later grid, exact
    std::vector<BoolMask> disocclusion;  // later grid: newly revealed pixels
    std::vector<BoolMask> occlusion;  // earlier grid: no correspondence in
                                      // the later frame (eval exclusion)
};

SynthScene generate_synth_scene(const SynthSceneConfig& config);

/// Deterministic smooth color texture for use as a stand-in style image.
Image make_style_image(int width, int height, uint64_t seed);

// ---- Report tables ----

/// Rows = methods, columns = scenes, cell = score averaged over styles.
struct BenchTable {
    std::string title;
    std::vector<std::string> methods;
    std::vector<std::string> scenes;
    std::vector<std::vector<double>> cells;  // [method][scene]

    void validate() const;
};

/// Aligned plain text; scores rendered in scientific notation with two
/// significant digits.
std::string format_text(const BenchTable& table);

/// Tab-separated, full precision; round-trips through parse_delimited.
std::string format_delimited(const BenchTable& table);

BenchTable parse_delimited(const std::string& text);

/// Checks each scene column for the expected strictly-decreasing score
/// order over the named methods (e.g. random-init > prev-init >
/// warped-init > short-term). Returns one message per violation; missing
/// methods are reported as violations.
std::vector<std::string> ordering_violations(
    const BenchTable& table, const std::vector<std::string>& decreasing);

/// Published short-term consistency scores (five scenes, five methods)
/// kept for reference rendering next to new results. These came from the
/// original large-scale evaluation and are not reproduced by this
/// implementation.
const BenchTable& published_reference();

}  // namespace vst
