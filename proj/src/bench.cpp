#include "vst/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "vst/errors.hpp"

namespace vst {

SequenceScore warp_back_mse(const std::vector<Image>& stylized,
                            const std::vector<FlowField>& flows,
                            const std::vector<BoolMask>& exclude) {
    if (stylized.size() < 2)
        throw ValidationError("warp_back_mse: need at least two frames");
    if (flows.size() != stylized.size() - 1 ||
        exclude.size() != stylized.size() - 1)
        throw ValidationError(
            "warp_back_mse: need one flow and one mask per adjacent pair "
            "(got " +
            std::to_string(flows.size()) + " flows, " +
            std::to_string(exclude.size()) + " masks for " +
            std::to_string(stylized.size()) + " frames)");

    SequenceScore score;
    double sum_means = 0.0;
    for (size_t t = 0; t + 1 < stylized.size(); ++t) {
        const Image& earlier = stylized[t];
        const Image& later = stylized[t + 1];
        if (!earlier.same_shape(later))
            throw ValidationError("warp_back_mse: frame shapes differ");
        if (flows[t].width != earlier.width ||
            flows[t].height != earlier.height ||
            exclude[t].width != earlier.width ||
            exclude[t].height != earlier.height)
            throw ValidationError(
                "warp_back_mse: flow/mask size does not match frames");

        const Image warped = warp_image(later, flows[t]);
        PairScore p;
        p.earlier = static_cast<int>(t) + 1;
        p.later = static_cast<int>(t) + 2;
        double acc = 0.0;
        for (int y = 0; y < earlier.height; ++y)
            for (int x = 0; x < earlier.width; ++x) {
                if (exclude[t].at(x, y)) continue;
                for (int c = 0; c < earlier.channels; ++c) {
                    const double d = warped.at(x, y, c) - earlier.at(x, y, c);
                    acc += d * d;
                }
                p.included += earlier.channels;
            }
        if (p.included == 0) {
            p.skipped = true;
            ++score.skipped_pairs;
        } else {
            p.mse = acc / static_cast<double>(p.included);
            sum_means += p.mse;
            ++score.evaluated_pairs;
        }
        score.pairs.push_back(p);
    }
    if (score.evaluated_pairs > 0) {
        score.mean = sum_means / score.evaluated_pairs;
        score.mean_defined = true;
    }
    return score;
}

double aggregate_styles(const std::vector<SequenceScore>& per_style) {
    double acc = 0.0;
    int n = 0;
    for (const SequenceScore& s : per_style)
        if (s.mean_defined) {
            acc += s.mean;
            ++n;
        }
    if (n == 0)
        throw ValidationError("aggregate_styles: no defined sequence means");
    return acc / n;
}

// ---- Synthetic scenes ----

namespace {

void box_blur(Image& img) {
    Image out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double acc = 0.0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int sx = std::clamp(x + dx, 0, img.width - 1);
                        const int sy = std::clamp(y + dy, 0, img.height - 1);
                        acc += img.at(sx, sy, c);
                    }
                out.at(x, y, c) = acc / 9.0;
            }
    img = std::move(out);
}

/// Min-max stretch per channel so textures keep contrast after blurring.
void stretch(Image& img) {
    for (int c = 0; c < img.channels; ++c) {
        double lo = 1.0, hi = 0.0;
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                lo = std::min(lo, img.at(x, y, c));
                hi = std::max(hi, img.at(x, y, c));
            }
        if (hi - lo < 1e-12) continue;
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                img.at(x, y, c) = (img.at(x, y, c) - lo) / (hi - lo);
    }
}

Image noise_texture(int w, int h, uint64_t seed, int smoothing) {
    Rng rng(seed);
    Image tex(w, h, 3);
    for (auto& v : tex.data) v = rng.uniform();
    for (int i = 0; i < smoothing; ++i) box_blur(tex);
    stretch(tex);
    return tex;
}

double sample_clamped(const Image& img, double x, double y, int c) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - x0, fy = y - y0;
    return (1 - fy) * ((1 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c)) +
           fy * ((1 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c));
}

struct SceneGeom {
    const SynthSceneConfig* cfg;

    double rect_x(int r, int t) const {
        return cfg->rects[r].x0 + t * cfg->rects[r].dx;
    }
    double rect_y(int r, int t) const {
        return cfg->rects[r].y0 + t * cfg->rects[r].dy;
    }
    /// Topmost rectangle containing the (real) point at frame t, -1 = bg.
    int id_at(int t, double x, double y) const {
        for (int r = static_cast<int>(cfg->rects.size()) - 1; r >= 0; --r) {
            const double rx = rect_x(r, t), ry = rect_y(r, t);
            if (x >= rx && x < rx + cfg->rects[r].w && y >= ry &&
                y < ry + cfg->rects[r].h)
                return r;
        }
        return -1;
    }
    void disp(int id, double& dx, double& dy) const {
        if (id < 0) {
            dx = dy = 0.0;
        } else {
            dx = cfg->rects[id].dx;
            dy = cfg->rects[id].dy;
        }
    }
};

}  // namespace

SynthSceneConfig SynthSceneConfig::default_scene() {
    SynthSceneConfig c;
    c.rects.push_back({10.0, 24.0, 20, 16, 3.0, 1.0});
    return c;
}

void SynthSceneConfig::validate() const {
    if (width < 1 || height < 1)
        throw ValidationError("synth scene: canvas must be at least 1x1");
    if (frames < 1) throw ValidationError("synth scene: frames must be >= 1");
    if (texture_smoothing < 0)
        throw ValidationError("synth scene: texture smoothing must be >= 0");
    for (size_t r = 0; r < rects.size(); ++r) {
        const Rect& rc = rects[r];
        if (rc.w < 1 || rc.h < 1)
            throw ValidationError("synth scene: rectangle " +
                                  std::to_string(r + 1) + " is degenerate");
        for (int t = 0; t < frames; ++t) {
            const double x = rc.x0 + t * rc.dx, y = rc.y0 + t * rc.dy;
            if (x < 0.0 || y < 0.0 || x + rc.w > width || y + rc.h > height)
                throw ValidationError(
                    "synth scene: rectangle " + std::to_string(r + 1) +
                    " leaves the canvas at frame " + std::to_string(t + 1));
        }
    }
}

SynthScene generate_synth_scene(const SynthSceneConfig& config) {
    config.validate();
    SceneGeom geom{&config};

    const Image bg =
        noise_texture(config.width, config.height, derive_seed(config.seed, 0),
                      config.texture_smoothing);
    std::vector<Image> rect_tex;
    for (size_t r = 0; r < config.rects.size(); ++r)
        rect_tex.push_back(noise_texture(config.rects[r].w, config.rects[r].h,
                                         derive_seed(config.seed, r + 1),
                                         config.texture_smoothing));

    SynthScene scene;
    for (int t = 0; t < config.frames; ++t) {
        Image frame(config.width, config.height, 3);
        for (int y = 0; y < config.height; ++y)
            for (int x = 0; x < config.width; ++x) {
                const int id = geom.id_at(t, x, y);
                for (int c = 0; c < 3; ++c)
                    frame.at(x, y, c) =
                        id < 0 ? bg.at(x, y, c)
                               : sample_clamped(rect_tex[id],
                                                x - geom.rect_x(id, t),
                                                y - geom.rect_y(id, t), c);
            }
        scene.frames.push_back(std::move(frame));
    }

    for (int t = 0; t + 1 < config.frames; ++t) {
        FlowField fwd(config.width, config.height);
        FlowField bwd(config.width, config.height);
        BoolMask occ(config.width, config.height);
        BoolMask dis(config.width, config.height);
        for (int y = 0; y < config.height; ++y)
            for (int x = 0; x < config.width; ++x) {
                double dx, dy;
                // earlier grid: exact motion + visibility at t+1
                const int id0 = geom.id_at(t, x, y);
                geom.disp(id0, dx, dy);
                fwd.set(x, y, static_cast<float>(dx), static_cast<float>(dy));
                const double tx = x + dx, ty = y + dy;
                const bool in_canvas = tx >= 0.0 && tx < config.width &&
                                       ty >= 0.0 && ty < config.height;
                occ.set(x, y,
                        !in_canvas || geom.id_at(t + 1, tx, ty) != id0);
                // later grid: exact reverse motion + newly revealed test
                const int id1 = geom.id_at(t + 1, x, y);
                geom.disp(id1, dx, dy);
                bwd.set(x, y, static_cast<float>(-dx),
                        static_cast<float>(-dy));
                const double sx = x - dx, sy = y - dy;
                const bool from_canvas = sx >= 0.0 && sx < config.width &&
                                         sy >= 0.0 && sy < config.height;
                dis.set(x, y,
                        !from_canvas || geom.id_at(t, sx, sy) != id1);
            }
        scene.forward.push_back(std::move(fwd));
        scene.backward.push_back(std::move(bwd));
        scene.occlusion.push_back(std::move(occ));
        scene.disocclusion.push_back(std::move(dis));
    }
    return scene;
}

Image make_style_image(int width, int height, uint64_t seed) {
    return noise_texture(width, height, seed, 3);
}

// ---- Tables ----

void BenchTable::validate() const {
    if (cells.size() != methods.size())
        throw ValidationError("bench table: one cell row per method required");
    for (const auto& row : cells)
        if (row.size() != scenes.size())
            throw ValidationError(
                "bench table: every row needs one cell per scene");
    auto check_label = [](const std::string& s) {
        if (s.empty() || s.find('\t') != std::string::npos ||
            s.find('\n') != std::string::npos)
            throw ValidationError(
                "bench table: labels must be non-empty and free of tabs and "
                "newlines");
    };
    for (const auto& m : methods) check_label(m);
    for (const auto& s : scenes) check_label(s);
}

namespace {

std::string sci2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1e", v);
    return buf;
}

std::string full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string format_text(const BenchTable& table) {
    table.validate();
    std::string head = "method";
    size_t w0 = head.size();
    for (const auto& m : table.methods) w0 = std::max(w0, m.size());
    std::vector<size_t> widths(table.scenes.size());
    for (size_t j = 0; j < table.scenes.size(); ++j) {
        widths[j] = table.scenes[j].size();
        for (const auto& row : table.cells)
            widths[j] = std::max(widths[j], sci2(row[j]).size());
    }

    std::ostringstream os;
    if (!table.title.empty()) os << table.title << "\n";
    auto pad = [&os](const std::string& s, size_t w) {
        os << s << std::string(w - s.size(), ' ');
    };
    pad(head, w0);
    for (size_t j = 0; j < table.scenes.size(); ++j) {
        os << "  ";
        pad(table.scenes[j], widths[j]);
    }
    os << "\n";
    for (size_t i = 0; i < table.methods.size(); ++i) {
        pad(table.methods[i], w0);
        for (size_t j = 0; j < table.scenes.size(); ++j) {
            os << "  ";
            pad(sci2(table.cells[i][j]), widths[j]);
        }
        os << "\n";
    }
    return os.str();
}

std::string format_delimited(const BenchTable& table) {
    table.validate();
    std::ostringstream os;
    if (!table.title.empty()) os << "# " << table.title << "\n";
    os << "method";
    for (const auto& s : table.scenes) os << "\t" << s;
    os << "\n";
    for (size_t i = 0; i < table.methods.size(); ++i) {
        os << table.methods[i];
        for (size_t j = 0; j < table.scenes.size(); ++j)
            os << "\t" << full(table.cells[i][j]);
        os << "\n";
    }
    return os.str();
}

BenchTable parse_delimited(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char ch : text) {
        if (ch == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) lines.push_back(cur);

    BenchTable table;
    size_t k = 0;
    if (k < lines.size() && lines[k].rfind("# ", 0) == 0)
        table.title = lines[k++].substr(2);
    if (k >= lines.size())
        throw ValidationError("bench table: missing header line");

    auto split = [](const std::string& line) {
        std::vector<std::string> fields;
        std::string f;
        for (char ch : line) {
            if (ch == '\t') {
                fields.push_back(f);
                f.clear();
            } else {
                f += ch;
            }
        }
        fields.push_back(f);
        return fields;
    };

    std::vector<std::string> header = split(lines[k++]);
    if (header.empty() || header[0] != "method")
        throw ValidationError(
            "bench table: header must start with 'method'");
    table.scenes.assign(header.begin() + 1, header.end());

    for (; k < lines.size(); ++k) {
        if (lines[k].empty()) continue;
        std::vector<std::string> fields = split(lines[k]);
        if (fields.size() != header.size())
            throw ValidationError("bench table: row '" + lines[k] +
                                  "' has the wrong field count");
        table.methods.push_back(fields[0]);
        std::vector<double> row;
        for (size_t j = 1; j < fields.size(); ++j) {
            size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(fields[j], &used);
            } catch (const std::exception&) {
                throw ValidationError("bench table: bad number '" +
                                      fields[j] + "'");
            }
            if (used != fields[j].size())
                throw ValidationError("bench table: bad number '" +
                                      fields[j] + "'");
            row.push_back(v);
        }
        table.cells.push_back(std::move(row));
    }
    table.validate();
    return table;
}

std::vector<std::string> ordering_violations(
    const BenchTable& table, const std::vector<std::string>& decreasing) {
    table.validate();
    std::vector<std::string> problems;
    std::vector<int> rows;
    for (const auto& name : decreasing) {
        auto it = std::find(table.methods.begin(), table.methods.end(), name);
        if (it == table.methods.end()) {
            problems.push_back("method '" + name + "' missing from table");
            continue;
        }
        rows.push_back(static_cast<int>(it - table.methods.begin()));
    }
    if (rows.size() != decreasing.size()) return problems;

    for (size_t j = 0; j < table.scenes.size(); ++j) {
        for (size_t k = 0; k + 1 < rows.size(); ++k) {
            const double hi = table.cells[rows[k]][j];
            const double lo = table.cells[rows[k + 1]][j];
            if (!(hi > lo))
                problems.push_back("scene '" + table.scenes[j] +
                                   "': expected " + decreasing[k] + " > " +
                                   decreasing[k + 1] + " but " + full(hi) +
                                   " <= " + full(lo));
        }
    }
    return problems;
}

const BenchTable& published_reference() {
    static const BenchTable table = [] {
        BenchTable t;
        t.title = "short-term consistency, published reference scores";
        t.methods = {"DeepFlow", "EpicFlow", "Init prev warped", "Init prev",
                     "Init random"};
        t.scenes = {"alley_2", "ambush_5", "ambush_6", "bandage_2",
                    "market_6"};
        t.cells = {
            {0.00061, 0.0062, 0.012, 0.00084, 0.0035},
            {0.00073, 0.0068, 0.014, 0.00080, 0.0032},
            {0.0016, 0.0063, 0.012, 0.0015, 0.0049},
            {0.010, 0.018, 0.028, 0.0041, 0.014},
            {0.019, 0.027, 0.037, 0.018, 0.023},
        };
        return t;
    }();
    return table;
}

}  // namespace vst
