#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vst/image.hpp"

namespace vst {

/// Dense displacement field in pixel units, row-major, (u,v) interleaved.
/// Stored as float to keep .flo round trips byte-identical.
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    FlowField() = default;
    FlowField(int w, int h)
        : width(w), height(h), data(static_cast<size_t>(w) * h * 2, 0.0f) {}

    float u(int x, int y) const {
        return data[(static_cast<size_t>(y) * width + x) * 2];
    }
    float v(int x, int y) const {
        return data[(static_cast<size_t>(y) * width + x) * 2 + 1];
    }
    void set(int x, int y, float fu, float fv) {
        data[(static_cast<size_t>(y) * width + x) * 2] = fu;
        data[(static_cast<size_t>(y) * width + x) * 2 + 1] = fv;
    }
};

/// Flow estimates between two frames of a pair (earlier, later):
///  - forward lives on the earlier frame's grid and points into the later,
///  - backward lives on the later frame's grid and points into the earlier.
struct FlowPair {
    FlowField forward;
    FlowField backward;
};

/// Boolean per-pixel mask, row-major.
struct BoolMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data;

    BoolMask() = default;
    BoolMask(int w, int h, bool fill = false)
        : width(w), height(h),
          data(static_cast<size_t>(w) * h, fill ? 1 : 0) {}

    bool at(int x, int y) const {
        return data[static_cast<size_t>(y) * width + x] != 0;
    }
    void set(int x, int y, bool b) {
        data[static_cast<size_t>(y) * width + x] = b ? 1 : 0;
    }
};

// ---- Middlebury .flo I/O ----
// Layout: float 202021.25 ("PIEH"), int32 width, int32 height, then
// width*height little-endian float32 (u,v) pairs, row-major.

/// Reads a .flo file. Non-finite values are rejected (declared policy:
/// files carrying NaN/Inf sentinels are refused rather than patched, which
/// keeps decode/encode round trips byte-identical).
FlowField read_flo(const std::string& path);

void write_flo(const FlowField& flow, const std::string& path);

// ---- Warping ----

/// Backward warping: destination pixel p takes the bilinear sample of src
/// at p + flow(p). Sample coordinates are clamped to the image rectangle
/// (edge replication).
Image warp_image(const Image& src, const FlowField& backward_flow);

/// Warps the forward flow onto the later frame's grid: each component of
/// the forward field is bilinearly sampled at p + backward(p).
FlowField warp_flow_forward(const FlowPair& pair);

/// Composes two fields: out(p) = first(p) + second(p + first(p)), with
/// bilinear, edge-clamped sampling of the second field. If first maps grid
/// X into frame Y and second maps grid Y into frame Z, the result maps
/// grid X into frame Z.
FlowField compose_flows(const FlowField& first, const FlowField& second);

// ---- Occlusion / reliability detection ----

/// Forward-backward consistency check. A pixel is flagged as disoccluded
/// iff  |w~ + w^|^2 > 0.01*(|w~|^2 + |w^|^2) + 0.5,  where w^ is the
/// backward flow and w~ the warped forward flow (warp_flow_forward).
BoolMask disocclusion_mask(const FlowPair& pair);

/// Motion boundary check on the backward field: flagged iff
/// |grad u|^2 + |grad v|^2 > 0.01*|w|^2 + 0.002, with central differences
/// in the interior and one-sided differences at borders.
BoolMask motion_boundary_mask(const FlowField& backward);

/// Per-pixel weights: 0 where the pair is disoccluded or on a motion
/// boundary, 1 everywhere else.
WeightMask consistency_weights(const FlowPair& pair);

/// Long-term weights for one offset: given short-term weights keyed by
/// offset (ascending), returns
///   max(c[target] - sum of c[k] for all offsets k < target, 0)
/// element-wise, i.e. weight is ceded to temporally closer frames.
WeightMask long_term_weights(
    const std::vector<std::pair<int, WeightMask>>& short_weights,
    int target_offset);

}  // namespace vst
