#include "vst/flow.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace vst {

namespace {

constexpr float kFloMagic = 202021.25f;  // spells "PIEH" in little-endian

struct BilinearTaps {
    int x0, x1, y0, y1;
    double wx, wy;
};

// Clamped bilinear taps for a real-valued sample position.
BilinearTaps taps_clamped(double sx, double sy, int width, int height) {
    if (sx < 0) sx = 0;
    if (sx > width - 1) sx = width - 1;
    if (sy < 0) sy = 0;
    if (sy > height - 1) sy = height - 1;
    BilinearTaps t;
    t.x0 = static_cast<int>(std::floor(sx));
    t.y0 = static_cast<int>(std::floor(sy));
    if (t.x0 > width - 2) t.x0 = width > 1 ? width - 2 : 0;
    if (t.y0 > height - 2) t.y0 = height > 1 ? height - 2 : 0;
    t.x1 = width > 1 ? t.x0 + 1 : t.x0;
    t.y1 = height > 1 ? t.y0 + 1 : t.y0;
    t.wx = sx - t.x0;
    t.wy = sy - t.y0;
    return t;
}

}  // namespace

FlowField read_flo(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open file");
    float magic = 0.0f;
    in.read(reinterpret_cast<char*>(&magic), sizeof(float));
    if (!in || magic != kFloMagic)
        throw IoError(path + ": not a flow file (bad magic)");
    int32_t w = 0, h = 0;
    in.read(reinterpret_cast<char*>(&w), sizeof(int32_t));
    in.read(reinterpret_cast<char*>(&h), sizeof(int32_t));
    if (!in || w <= 0 || h <= 0 || w > 100000 || h > 100000)
        throw IoError(path + ": bad dimensions in header");
    FlowField f(w, h);
    in.read(reinterpret_cast<char*>(f.data.data()),
            static_cast<std::streamsize>(f.data.size() * sizeof(float)));
    if (static_cast<size_t>(in.gcount()) != f.data.size() * sizeof(float))
        throw IoError(path + ": size mismatch, payload shorter than header claims");
    char extra;
    if (in.read(&extra, 1))
        throw IoError(path + ": size mismatch, trailing bytes after payload");
    for (float v : f.data)
        if (!std::isfinite(v))
            throw IoError(path + ": non-finite flow value");
    return f;
}

void write_flo(const FlowField& flow, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(&kFloMagic), sizeof(float));
    int32_t w = flow.width, h = flow.height;
    out.write(reinterpret_cast<const char*>(&w), sizeof(int32_t));
    out.write(reinterpret_cast<const char*>(&h), sizeof(int32_t));
    out.write(reinterpret_cast<const char*>(flow.data.data()),
              static_cast<std::streamsize>(flow.data.size() * sizeof(float)));
    if (!out) throw IoError(path + ": write failed");
}

Image warp_image(const Image& src, const FlowField& backward_flow) {
    if (src.width != backward_flow.width || src.height != backward_flow.height)
        throw ValidationError("warp_image: dimensions disagree");
    Image out(src.width, src.height, src.channels);
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x) {
            const double sx = x + backward_flow.u(x, y);
            const double sy = y + backward_flow.v(x, y);
            const BilinearTaps t = taps_clamped(sx, sy, src.width, src.height);
            for (int c = 0; c < src.channels; ++c) {
                double top = (1 - t.wx) * src.at(t.x0, t.y0, c) +
                             t.wx * src.at(t.x1, t.y0, c);
                double bot = (1 - t.wx) * src.at(t.x0, t.y1, c) +
                             t.wx * src.at(t.x1, t.y1, c);
                out.at(x, y, c) = (1 - t.wy) * top + t.wy * bot;
            }
        }
    return out;
}

FlowField warp_flow_forward(const FlowPair& pair) {
    const FlowField& fwd = pair.forward;
    const FlowField& bwd = pair.backward;
    if (fwd.width != bwd.width || fwd.height != bwd.height)
        throw ValidationError("warp_flow_forward: dimensions disagree");
    FlowField out(bwd.width, bwd.height);
    for (int y = 0; y < bwd.height; ++y)
        for (int x = 0; x < bwd.width; ++x) {
            const double sx = x + bwd.u(x, y);
            const double sy = y + bwd.v(x, y);
            const BilinearTaps t = taps_clamped(sx, sy, fwd.width, fwd.height);
            double wu = (1 - t.wy) * ((1 - t.wx) * fwd.u(t.x0, t.y0) +
                                      t.wx * fwd.u(t.x1, t.y0)) +
                        t.wy * ((1 - t.wx) * fwd.u(t.x0, t.y1) +
                                t.wx * fwd.u(t.x1, t.y1));
            double wv = (1 - t.wy) * ((1 - t.wx) * fwd.v(t.x0, t.y0) +
                                      t.wx * fwd.v(t.x1, t.y0)) +
                        t.wy * ((1 - t.wx) * fwd.v(t.x0, t.y1) +
                                t.wx * fwd.v(t.x1, t.y1));
            out.set(x, y, static_cast<float>(wu), static_cast<float>(wv));
        }
    return out;
}

FlowField compose_flows(const FlowField& first, const FlowField& second) {
    if (first.width != second.width || first.height != second.height)
        throw ValidationError("compose_flows: dimensions disagree");
    FlowField out(first.width, first.height);
    for (int y = 0; y < first.height; ++y)
        for (int x = 0; x < first.width; ++x) {
            const double fu = first.u(x, y);
            const double fv = first.v(x, y);
            const BilinearTaps t =
                taps_clamped(x + fu, y + fv, second.width, second.height);
            double su = (1 - t.wy) * ((1 - t.wx) * second.u(t.x0, t.y0) +
                                      t.wx * second.u(t.x1, t.y0)) +
                        t.wy * ((1 - t.wx) * second.u(t.x0, t.y1) +
                                t.wx * second.u(t.x1, t.y1));
            double sv = (1 - t.wy) * ((1 - t.wx) * second.v(t.x0, t.y0) +
                                      t.wx * second.v(t.x1, t.y0)) +
                        t.wy * ((1 - t.wx) * second.v(t.x0, t.y1) +
                                t.wx * second.v(t.x1, t.y1));
            out.set(x, y, static_cast<float>(fu + su), static_cast<float>(fv + sv));
        }
    return out;
}

BoolMask disocclusion_mask(const FlowPair& pair) {
    const FlowField warped = warp_flow_forward(pair);
    const FlowField& bwd = pair.backward;
    BoolMask mask(bwd.width, bwd.height);
    for (int y = 0; y < bwd.height; ++y)
        for (int x = 0; x < bwd.width; ++x) {
            const double wu = warped.u(x, y), wv = warped.v(x, y);
            const double bu = bwd.u(x, y), bv = bwd.v(x, y);
            const double lhs = (wu + bu) * (wu + bu) + (wv + bv) * (wv + bv);
            const double rhs =
                0.01 * (wu * wu + wv * wv + bu * bu + bv * bv) + 0.5;
            mask.set(x, y, lhs > rhs);
        }
    return mask;
}

BoolMask motion_boundary_mask(const FlowField& backward) {
    const int w = backward.width, h = backward.height;
    BoolMask mask(w, h);
    auto dx = [&](int x, int y, bool comp_v) -> double {
        auto f = [&](int xx) {
            return comp_v ? backward.v(xx, y) : backward.u(xx, y);
        };
        if (w == 1) return 0.0;
        if (x == 0) return f(1) - f(0);
        if (x == w - 1) return f(w - 1) - f(w - 2);
        return 0.5 * (f(x + 1) - f(x - 1));
    };
    auto dy = [&](int x, int y, bool comp_v) -> double {
        auto f = [&](int yy) {
            return comp_v ? backward.v(x, yy) : backward.u(x, yy);
        };
        if (h == 1) return 0.0;
        if (y == 0) return f(1) - f(0);
        if (y == h - 1) return f(h - 1) - f(h - 2);
        return 0.5 * (f(y + 1) - f(y - 1));
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double gux = dx(x, y, false), guy = dy(x, y, false);
            const double gvx = dx(x, y, true), gvy = dy(x, y, true);
            const double grad2 = gux * gux + guy * guy + gvx * gvx + gvy * gvy;
            const double u = backward.u(x, y), v = backward.v(x, y);
            mask.set(x, y, grad2 > 0.01 * (u * u + v * v) + 0.002);
        }
    return mask;
}

WeightMask consistency_weights(const FlowPair& pair) {
    const BoolMask disocc = disocclusion_mask(pair);
    const BoolMask boundary = motion_boundary_mask(pair.backward);
    WeightMask w(disocc.width, disocc.height);
    for (size_t i = 0; i < w.data.size(); ++i)
        w.data[i] = (disocc.data[i] || boundary.data[i]) ? 0.0 : 1.0;
    return w;
}

WeightMask long_term_weights(
    const std::vector<std::pair<int, WeightMask>>& short_weights,
    int target_offset) {
    if (short_weights.empty())
        throw ValidationError("long_term_weights: no masks given");
    const int w = short_weights.front().second.width;
    const int h = short_weights.front().second.height;
    const WeightMask* target = nullptr;
    int prev_offset = 0;
    for (const auto& [offset, mask] : short_weights) {
        if (offset <= prev_offset)
            throw ValidationError(
                "long_term_weights: offsets must be strictly ascending");
        prev_offset = offset;
        if (mask.width != w || mask.height != h)
            throw ValidationError("long_term_weights: inconsistent dimensions");
        if (offset == target_offset) target = &mask;
    }
    if (!target)
        throw ValidationError("long_term_weights: target offset not in list");
    WeightMask out(w, h);
    for (size_t i = 0; i < out.data.size(); ++i) {
        double acc = target->data[i];
        for (const auto& [offset, mask] : short_weights) {
            if (offset >= target_offset) break;
            acc -= mask.data[i];
        }
        out.data[i] = acc < 0.0 ? 0.0 : (acc > 1.0 ? 1.0 : acc);
    }
    return out;
}

}  // namespace vst
