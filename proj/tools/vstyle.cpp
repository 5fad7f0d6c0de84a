// vstyle: command-line front end for the video style transfer engine.
//
// Subcommands: stylize-image, stylize-video, evaluate, synth, flow-masks.
// Every run writes its fully resolved configuration next to its outputs;
// re-running from that file reproduces the outputs byte for byte.
// Exit codes: 0 success, 1 runtime failure, 2 validation failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vst/bench.hpp"
#include "vst/errors.hpp"
#include "vst/pipeline.hpp"

namespace fs = std::filesystem;
using namespace vst;

namespace {

// ---- small utilities ----

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string slurp(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path.string());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void spit(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os << text;
}

std::string frame_name(int i, const char* stem = "frame",
                       const char* ext = "ppm") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%04d.%s", stem, i, ext);
    return buf;
}

std::string pair_name(const char* stem, int a, int b, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%04d_%04d.%s", stem, a, b, ext);
    return buf;
}

int count_frames(const fs::path& dir) {
    int n = 0;
    while (n < 9999 && fs::exists(dir / frame_name(n + 1))) ++n;
    return n;
}

WeightMask mask_to_weights(const BoolMask& m) {
    WeightMask w(m.width, m.height);
    for (size_t i = 0; i < m.data.size(); ++i)
        w.data[i] = m.data[i] ? 1.0 : 0.0;
    return w;
}

BoolMask weights_to_mask(const WeightMask& w) {
    BoolMask m(w.width, w.height);
    for (size_t i = 0; i < w.data.size(); ++i)
        m.data[i] = w.data[i] > 0.5 ? 1 : 0;
    return m;
}

// The manifest is the subcommand's fully resolved configuration under a
// [subcommand] section, so it can be replayed with
//   vstyle <subcommand> --config <manifest>
// (the --config option lives on the top-level app; explicit flags win).
void write_manifest(CLI::App* cmd, const fs::path& path) {
    spit(path,
         "[" + cmd->get_name() + "]\n" + cmd->config_to_str(true, false));
}

// ---- shared solve options ----

struct SolveOpts {
    double alpha = -1.0;  // -1 = take the resolution preset's value
    double beta = -1.0;
    double gamma = -1.0;
    std::string preset = "auto";  // auto | benchmark
    std::vector<int> style_layers{1, 2, 3, 4};
    std::vector<int> content_layers{3};
    std::vector<int> offsets{1};
    bool robust = false;
    std::string method = "quasi-newton";
    int iters = 1000;
    int window = 50;
    double threshold = 1e-4;
    double relaxed_threshold = 1e-3;
    bool relax_later = false;
    int history = 8;
    uint64_t seed = 20177;
    double init_mean = 0.5;
    double init_stddev = 0.1;
    uint64_t extractor_seed = 977;
    int threads = 1;
};

void add_solve_options(CLI::App* cmd, SolveOpts& o, bool video) {
    cmd->add_option("--alpha", o.alpha,
                    "Content weight (-1 = use the preset value)")
        ->capture_default_str();
    cmd->add_option("--beta", o.beta,
                    "Style weight (-1 = use the preset value)")
        ->capture_default_str();
    cmd->add_option("--gamma", o.gamma,
                    "Temporal weight (-1 = use the preset value)")
        ->capture_default_str();
    cmd->add_option("--weights-preset", o.preset,
                    "Preset for unset weights: auto picks the nearest "
                    "resolution anchor, benchmark uses (1, 100, 400)")
        ->check(CLI::IsMember({"auto", "benchmark"}))
        ->capture_default_str();
    cmd->add_option("--style-layers", o.style_layers, "Style layer indices")
        ->capture_default_str();
    cmd->add_option("--content-layers", o.content_layers,
                    "Content layer indices")
        ->capture_default_str();
    cmd->add_option("--method", o.method, "Optimizer")
        ->check(CLI::IsMember({"quasi-newton", "first-order"}))
        ->capture_default_str();
    cmd->add_option("--iters", o.iters, "Iteration cap per solve")
        ->capture_default_str();
    cmd->add_option("--window", o.window, "Convergence window (iterations)")
        ->capture_default_str();
    cmd->add_option("--threshold", o.threshold,
                    "Relative loss-change threshold over the window")
        ->capture_default_str();
    cmd->add_option("--history", o.history, "Quasi-Newton history size")
        ->capture_default_str();
    cmd->add_option("--seed", o.seed, "Base seed for noise initializations")
        ->capture_default_str();
    cmd->add_option("--init-mean", o.init_mean, "Noise init mean")
        ->capture_default_str();
    cmd->add_option("--init-stddev", o.init_stddev, "Noise init stddev")
        ->capture_default_str();
    cmd->add_option("--extractor-seed", o.extractor_seed,
                    "Seed of the feature extractor filter bank")
        ->capture_default_str();
    if (video) {
        cmd->add_option("--J,--offsets", o.offsets,
                        "Long-term offsets (long-term algorithm)")
            ->capture_default_str();
        cmd->add_flag("--robust", o.robust,
                      "Absolute-error temporal loss with doubled gamma");
        cmd->add_flag("--relax-later", o.relax_later,
                      "Relax the stopping threshold after frame 1");
        cmd->add_option("--relaxed-threshold", o.relaxed_threshold,
                        "Threshold used when --relax-later is set")
            ->capture_default_str();
        cmd->add_option("--threads", o.threads,
                        "Worker cap for independent frame solves")
            ->capture_default_str();
    }
}

StylizeSettings make_settings(const SolveOpts& o, int width, int height) {
    LossWeights lw = o.preset == "benchmark" ? benchmark_weights()
                                             : weights_for_resolution(width,
                                                                      height);
    if (o.alpha >= 0.0) lw.alpha = o.alpha;
    if (o.beta >= 0.0) lw.beta = o.beta;
    if (o.gamma >= 0.0) lw.gamma = o.gamma;
    lw.style_layers = o.style_layers;
    lw.content_layers = o.content_layers;
    lw.long_term_offsets = o.offsets;
    if (o.robust) lw = lw.with_robust_temporal();

    StylizeSettings s;
    s.weights = lw;
    s.solver.max_iterations = o.iters;
    s.solver.convergence_window = o.window;
    s.solver.convergence_threshold = o.threshold;
    s.solver.history = o.history;
    s.solver.method = o.method == "first-order"
                          ? SolveMethod::adaptive_first_order
                          : SolveMethod::quasi_newton;
    s.extractor.seed = o.extractor_seed;
    s.seed = o.seed;
    s.init_mean = o.init_mean;
    s.init_stddev = o.init_stddev;
    s.relax_later_frames = o.relax_later;
    s.relaxed_threshold = o.relaxed_threshold;
    s.threads = o.threads;
    return s;
}

std::string describe_weights(const LossWeights& w) {
    std::ostringstream os;
    os << "alpha=" << w.alpha << " beta=" << w.beta << " gamma=" << w.gamma;
    return os.str();
}

// ---- stylize-image ----

struct ImageArgs {
    std::string content, style, out;
    SolveOpts solve;
};

int run_stylize_image(const ImageArgs& a, CLI::App* cmd) {
    const Image content = read_ppm(a.content);
    const Image style = read_ppm(a.style);
    const StylizeSettings settings =
        make_settings(a.solve, content.width, content.height);

    Rng rng(derive_seed(settings.seed, 0));
    const Image init =
        gaussian_init(content.width, content.height, content.channels, rng,
                      settings.init_mean, settings.init_stddev);
    SolveReport report;
    const Image out = stylize_single(content, style, init, settings, &report);

    fs::path out_path(a.out);
    if (out_path.has_parent_path())
        fs::create_directories(out_path.parent_path());
    write_ppm(out, out_path.string());
    std::ofstream log(fs::path(out_path).replace_extension(".log"),
                      std::ios::binary);
    report.write_log(log);
    write_manifest(cmd, fs::path(out_path).replace_extension(".cfg"));

    std::cout << "stylize-image: " << describe_weights(settings.weights)
              << "\n"
              << a.out << ": " << report.iterations << " iterations, "
              << report.termination << ", loss " << report.final_loss.total
              << "\n";
    return 0;
}

// ---- stylize-video ----

struct VideoArgs {
    std::string frames_dir, flows_dir, style, out_dir;
    std::string algorithm = "short-term";
    int count = 0;  // 0 = all consecutive frames found
    bool resume = false;
    bool no_compose = false;
    bool no_masks = false;
    int passes = 10;
    int pass_iters = 100;
    double delta = 0.5;
    int activate_pass = 4;
    SolveOpts solve;
};

std::string weights_mask_name(int frame, int offset) {
    char buf[64];
    if (offset >= 0)
        std::snprintf(buf, sizeof(buf), "weights_%04d_j%d.pgm", frame, offset);
    else
        std::snprintf(buf, sizeof(buf), "weights_%04d_next.pgm", frame);
    return buf;
}

int run_stylize_video(const VideoArgs& a, CLI::App* cmd) {
    const Algorithm algo = algorithm_from_string(a.algorithm);
    const fs::path frames_dir(a.frames_dir);
    const int available = count_frames(frames_dir);
    const int n = a.count > 0 ? a.count : available;
    if (n < 1)
        throw ValidationError("no frames named frame_0001.ppm ... found in " +
                              a.frames_dir);
    if (n > available)
        throw ValidationError("requested " + std::to_string(n) +
                              " frames but only " +
                              std::to_string(available) + " are present in " +
                              a.frames_dir);

    const bool needs_flows =
        (algo == Algorithm::warped_init || algo == Algorithm::short_term ||
         algo == Algorithm::long_term ||
         (algo == Algorithm::multi_pass && a.passes > 1)) &&
        n > 1;
    if (needs_flows && a.flows_dir.empty())
        throw ValidationError("algorithm " + a.algorithm +
                              " requires --flows");

    std::vector<Image> frames;
    for (int i = 1; i <= n; ++i)
        frames.push_back(read_ppm((frames_dir / frame_name(i)).string()));
    const Image style = read_ppm(a.style);

    const StylizeSettings settings =
        make_settings(a.solve, frames[0].width, frames[0].height);
    MultiPassSettings mp;
    mp.passes = a.passes;
    mp.iterations_per_pass = a.pass_iters;
    mp.delta = a.delta;
    mp.temporal_activation_pass = a.activate_pass;

    const DirectoryFlowSource flows(
        a.flows_dir.empty() ? "." : a.flows_dir, !a.no_compose);

    const std::string manifest =
        "[" + cmd->get_name() + "]\n" + cmd->config_to_str(true, false);
    const fs::path out_dir(a.out_dir);
    fs::create_directories(out_dir);
    const fs::path manifest_path = out_dir / "manifest.cfg";

    std::vector<Image> prefix;
    const std::vector<Image>* prefix_ptr = nullptr;
    if (a.resume && fs::exists(manifest_path)) {
        const std::string old = slurp(manifest_path);
        if (fnv1a(old) != fnv1a(manifest) || old != manifest)
            throw ValidationError(
                "existing outputs in " + a.out_dir +
                " came from a different configuration; remove them or drop "
                "--resume");
        int done = 0;
        while (done < n && fs::exists(out_dir / frame_name(done + 1))) ++done;
        if (algo == Algorithm::multi_pass) {
            if (done == n) {
                std::cout << "all " << n << " frames already present\n";
                return 0;
            }
            std::cout << "multi-pass cannot resume partial outputs; "
                         "re-running all frames\n";
        } else {
            for (int i = 1; i <= done; ++i)
                prefix.push_back(
                    read_ppm((out_dir / frame_name(i)).string()));
            if (done > 0) prefix_ptr = &prefix;
            std::cout << "resuming after frame " << done << "\n";
        }
    }

    std::cout << "stylize-video: " << a.algorithm << ", " << n << " frames, "
              << describe_weights(settings.weights) << "\n";
    const SequenceResult res = run_sequence(frames, style, algo, flows,
                                            settings, mp, prefix_ptr);

    for (int k = 0; k < n; ++k) {
        if (res.reports[k].termination == "resumed") continue;
        write_ppm(res.frames[k], (out_dir / frame_name(k + 1)).string());
        std::ofstream log(out_dir / frame_name(k + 1, "frame", "log"),
                          std::ios::binary);
        res.reports[k].write_log(log);
        if (!a.no_masks)
            for (const auto& [offset, mask] : res.temporal_weights[k])
                write_pgm(mask,
                          (out_dir / weights_mask_name(k + 1, offset))
                              .string());
        std::cout << "frame " << k + 1 << ": " << res.reports[k].iterations
                  << " iterations, " << res.reports[k].termination
                  << ", loss " << res.reports[k].final_loss.total << "\n";
    }
    if (!res.pass_schedule.empty()) {
        std::string sched;
        for (const auto& p : res.pass_schedule) sched += p + "\n";
        spit(out_dir / "passes.txt", sched);
    }
    spit(manifest_path, manifest);
    return 0;
}

// ---- evaluate ----

struct EvalArgs {
    std::vector<std::string> results;
    std::vector<std::string> labels;
    std::string flows_dir, masks_dir;
    std::string scene = "score";
    std::string format = "text";
    std::string out;
    bool per_pair = false;
    bool show_reference = false;
};

int run_evaluate(const EvalArgs& a, CLI::App* cmd) {
    std::vector<std::string> labels = a.labels;
    if (labels.empty())
        for (const auto& r : a.results)
            labels.push_back(fs::path(r).filename().string());
    if (labels.size() != a.results.size())
        throw ValidationError("need exactly one --label per --results dir");

    int n = -1;
    for (const auto& r : a.results) {
        const int cnt = count_frames(r);
        if (cnt < 2)
            throw ValidationError("results dir " + r +
                                  " holds fewer than 2 frames");
        if (n < 0) n = cnt;
        if (cnt != n)
            throw ValidationError(
                "mismatched frame counts: " + r + " has " +
                std::to_string(cnt) + ", expected " + std::to_string(n));
    }

    const fs::path flow_dir(a.flows_dir);
    std::vector<FlowField> flows;
    std::vector<BoolMask> masks;
    std::string mask_source;
    for (int t = 1; t < n; ++t) {
        const fs::path f = flow_dir / pair_name("flow_fwd", t, t + 1, "flo");
        if (!fs::exists(f))
            throw ValidationError("missing ground-truth flow " + f.string());
        flows.push_back(read_flo(f.string()));
        if (!a.masks_dir.empty()) {
            const fs::path m =
                fs::path(a.masks_dir) / pair_name("occ", t, t + 1, "pgm");
            if (!fs::exists(m))
                throw ValidationError("missing mask " + m.string());
            masks.push_back(weights_to_mask(read_pgm(m.string())));
            mask_source = "ground truth from " + a.masks_dir;
        } else {
            const fs::path b =
                flow_dir / pair_name("flow_bwd", t, t + 1, "flo");
            if (!fs::exists(b))
                throw ValidationError(
                    "missing " + b.string() +
                    " (needed to derive masks; pass --masks instead)");
            // consistency check with the roles swapped marks the pixels of
            // the earlier frame that have no correspondence in the later
            FlowPair swapped{read_flo(b.string()), flows.back()};
            masks.push_back(disocclusion_mask(swapped));
            mask_source = "derived from flow consistency";
        }
    }

    BenchTable table;
    table.title = "warp-back MSE (masks: " + mask_source + ")";
    table.scenes = {a.scene};
    std::ostringstream detail;
    for (size_t r = 0; r < a.results.size(); ++r) {
        std::vector<Image> frames;
        for (int i = 1; i <= n; ++i)
            frames.push_back(
                read_ppm((fs::path(a.results[r]) / frame_name(i)).string()));
        const SequenceScore score = warp_back_mse(frames, flows, masks);
        table.methods.push_back(labels[r]);
        table.cells.push_back(
            {score.mean_defined ? score.mean
                                : std::numeric_limits<double>::quiet_NaN()});
        if (a.per_pair)
            for (const PairScore& p : score.pairs)
                detail << labels[r] << " pair (" << p.earlier << ", "
                       << p.later << "): "
                       << (p.skipped ? std::string("skipped (empty mask)")
                                     : "mse " + std::to_string(p.mse) +
                                           ", included " +
                                           std::to_string(p.included))
                       << "\n";
        if (score.skipped_pairs > 0)
            std::cerr << "note: " << labels[r] << ": "
                      << score.skipped_pairs
                      << " pair(s) skipped (fully masked)\n";
    }

    std::string rendered = a.format == "delimited" ? format_delimited(table)
                                                   : format_text(table);
    if (a.per_pair) rendered += detail.str();
    if (a.show_reference)
        rendered += "\n" + (a.format == "delimited"
                                ? format_delimited(published_reference())
                                : format_text(published_reference()));

    if (a.out.empty()) {
        std::cout << rendered;
    } else {
        spit(a.out, rendered);
        write_manifest(cmd, fs::path(a.out).concat(".cfg"));
        std::cout << "report written to " << a.out << "\n";
    }
    return 0;
}

// ---- synth ----

struct SynthArgs {
    std::string out;
    uint64_t seed = 7;
    int width = 64, height = 64, frames = 5;
    int smoothing = 2;
    std::vector<std::string> rects;
    bool static_scene = false;
    int styles = 0;
};

SynthSceneConfig::Rect parse_rect(const std::string& text) {
    std::vector<double> v;
    std::string field;
    std::istringstream is(text);
    while (std::getline(is, field, ',')) {
        try {
            size_t used = 0;
            v.push_back(std::stod(field, &used));
            if (used != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw ValidationError("bad --rect component '" + field + "'");
        }
    }
    if (v.size() != 6)
        throw ValidationError(
            "--rect needs x0,y0,w,h,dx,dy (got '" + text + "')");
    SynthSceneConfig::Rect r;
    r.x0 = v[0];
    r.y0 = v[1];
    r.w = static_cast<int>(v[2]);
    r.h = static_cast<int>(v[3]);
    r.dx = v[4];
    r.dy = v[5];
    return r;
}

// Default rectangle scaled to the requested canvas, with the motion
// reduced until the full trajectory stays inside.
SynthSceneConfig::Rect fitted_rect(int width, int height, int frames) {
    SynthSceneConfig::Rect r;
    r.w = std::max(1, width / 3);
    r.h = std::max(1, height / 4);
    r.x0 = width / 6;
    r.y0 = height / 3;
    const int steps = std::max(1, frames - 1);
    r.dx = std::min(3.0, std::floor((width - r.x0 - r.w) / steps));
    r.dy = std::min(1.0, std::floor((height - r.y0 - r.h) / steps));
    return r;
}

int run_synth(const SynthArgs& a, CLI::App* cmd) {
    SynthSceneConfig cfg;
    cfg.seed = a.seed;
    cfg.width = a.width;
    cfg.height = a.height;
    cfg.frames = a.frames;
    cfg.texture_smoothing = a.smoothing;
    if (a.rects.empty()) {
        cfg.rects.push_back(fitted_rect(a.width, a.height, a.frames));
    } else {
        for (const auto& r : a.rects) cfg.rects.push_back(parse_rect(r));
    }
    if (a.static_scene)
        for (auto& r : cfg.rects) r.dx = r.dy = 0.0;

    const SynthScene scene = generate_synth_scene(cfg);
    const fs::path out(a.out);
    fs::create_directories(out);
    for (int t = 0; t < cfg.frames; ++t)
        write_ppm(scene.frames[t], (out / frame_name(t + 1)).string());
    for (int t = 0; t + 1 < cfg.frames; ++t) {
        const int ga = t + 1, gb = t + 2;
        write_flo(scene.forward[t],
                  (out / pair_name("flow_fwd", ga, gb, "flo")).string());
        write_flo(scene.backward[t],
                  (out / pair_name("flow_bwd", ga, gb, "flo")).string());
        write_pgm(mask_to_weights(scene.disocclusion[t]),
                  (out / pair_name("disocc", ga, gb, "pgm")).string());
        write_pgm(mask_to_weights(scene.occlusion[t]),
                  (out / pair_name("occ", ga, gb, "pgm")).string());
    }
    for (int k = 1; k <= a.styles; ++k) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "style_%02d.ppm", k);
        write_ppm(make_style_image(cfg.width, cfg.height,
                                   derive_seed(cfg.seed, 1000 + k)),
                  (out / buf).string());
    }
    write_manifest(cmd, out / "manifest.cfg");
    std::cout << "synth: " << cfg.frames << " frames, "
              << cfg.rects.size() << " rectangle(s), " << a.styles
              << " style image(s) in " << a.out << "\n";
    return 0;
}

// ---- flow-masks ----

struct FlowMaskArgs {
    std::string flows_dir, out;
    int frames = 0;
    std::vector<int> offsets{1};
    bool no_compose = false;
};

int run_flow_masks(const FlowMaskArgs& a, CLI::App* cmd) {
    if (a.frames < 2)
        throw ValidationError("flow-masks needs --frames >= 2");
    const DirectoryFlowSource src(a.flows_dir, !a.no_compose);
    const fs::path out(a.out);
    fs::create_directories(out);

    // fail before writing anything
    std::vector<std::pair<int, int>> needed;
    for (int i = 2; i <= a.frames; ++i)
        for (int j : a.offsets)
            if (i - j >= 1) needed.emplace_back(i - j, i);
    std::string missing;
    for (auto [x, y] : needed)
        if (!src.has_pair(x, y)) missing += "\n  " + src.describe(x, y);
    if (!missing.empty())
        throw ValidationError("missing flow data:" + missing);

    const bool long_term = a.offsets.size() > 1 ||
                           (a.offsets.size() == 1 && a.offsets[0] != 1);
    for (int i = 2; i <= a.frames; ++i) {
        std::vector<std::pair<int, WeightMask>> short_w;
        for (int j : a.offsets) {
            if (i - j < 1) continue;
            const FlowPair p = src.pair(i - j, i);
            write_pgm(mask_to_weights(disocclusion_mask(p)),
                      (out / pair_name("disocc", i - j, i, "pgm")).string());
            write_pgm(mask_to_weights(motion_boundary_mask(p.backward)),
                      (out / pair_name("boundary", i - j, i, "pgm")).string());
            WeightMask c = consistency_weights(p);
            write_pgm(c,
                      (out / pair_name("weights", i - j, i, "pgm")).string());
            short_w.emplace_back(j, std::move(c));
        }
        if (long_term)
            for (const auto& [j, c] : short_w) {
                char buf[48];
                std::snprintf(buf, sizeof(buf), "longterm_%04d_j%d.pgm", i, j);
                write_pgm(long_term_weights(short_w, j), (out / buf).string());
            }
    }
    write_manifest(cmd, out / "manifest.cfg");
    std::cout << "flow-masks: wrote masks for " << a.frames << " frames to "
              << a.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"video style transfer engine"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "Read options from a manifest/config file");

    ImageArgs img;
    CLI::App* c_img = app.add_subcommand(
        "stylize-image", "Transfer a style onto a single image");
    c_img->fallthrough();
    c_img->add_option("--content", img.content, "Content image (PPM)")
        ->required()
        ->check(CLI::ExistingFile);
    c_img->add_option("--style", img.style, "Style image (PPM)")
        ->required()
        ->check(CLI::ExistingFile);
    c_img->add_option("--out", img.out, "Output image path (PPM)")
        ->required();
    add_solve_options(c_img, img.solve, false);

    VideoArgs vid;
    CLI::App* c_vid = app.add_subcommand(
        "stylize-video", "Stylize a frame sequence coherently");
    c_vid->fallthrough();
    c_vid->add_option("--frames", vid.frames_dir,
                      "Directory holding frame_0001.ppm ...")
        ->required()
        ->check(CLI::ExistingDirectory);
    c_vid->add_option("--style", vid.style, "Style image (PPM)")
        ->required()
        ->check(CLI::ExistingFile);
    c_vid->add_option("--flows", vid.flows_dir,
                      "Directory holding flow_fwd/flow_bwd .flo files")
        ->check(CLI::ExistingDirectory);
    c_vid->add_option("--out", vid.out_dir, "Output directory")->required();
    c_vid->add_option("--algorithm", vid.algorithm,
                      "independent | prev-init | warped-init | short-term | "
                      "long-term | multi-pass")
        ->check(CLI::IsMember({"independent", "prev-init", "warped-init",
                               "short-term", "long-term", "multi-pass"}))
        ->capture_default_str();
    c_vid->add_option("--count", vid.count,
                      "Frame count (0 = all consecutive frames found)")
        ->capture_default_str();
    c_vid->add_flag("--resume", vid.resume,
                    "Skip frames whose outputs already exist (same manifest)")
        ->configurable(false);
    c_vid->add_flag("--no-compose", vid.no_compose,
                    "Do not compose missing long-range flows from adjacent "
                    "ones");
    c_vid->add_flag("--no-masks", vid.no_masks,
                    "Do not export temporal weight masks");
    c_vid->add_option("--passes", vid.passes, "Multi-pass: pass count")
        ->capture_default_str();
    c_vid->add_option("--pass-iters", vid.pass_iters,
                      "Multi-pass: iterations per pass")
        ->capture_default_str();
    c_vid->add_option("--delta", vid.delta, "Multi-pass: blend factor")
        ->capture_default_str();
    c_vid->add_option("--activate-pass", vid.activate_pass,
                      "Multi-pass: first pass with the temporal term")
        ->capture_default_str();
    add_solve_options(c_vid, vid.solve, true);

    EvalArgs ev;
    CLI::App* c_ev = app.add_subcommand(
        "evaluate", "Warp-back consistency benchmark of stylized results");
    c_ev->fallthrough();
    c_ev->add_option("--results", ev.results,
                     "Stylized result directory (repeatable)")
        ->required()
        ->check(CLI::ExistingDirectory);
    c_ev->add_option("--labels", ev.labels,
                     "Row label per results directory");
    c_ev->add_option("--flows", ev.flows_dir,
                     "Ground-truth flow directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    c_ev->add_option("--masks", ev.masks_dir,
                     "Ground-truth occlusion masks (occ_*.pgm); derived "
                     "from flows when omitted")
        ->check(CLI::ExistingDirectory);
    c_ev->add_option("--scene", ev.scene, "Column label")
        ->capture_default_str();
    c_ev->add_option("--format", ev.format, "text | delimited")
        ->check(CLI::IsMember({"text", "delimited"}))
        ->capture_default_str();
    c_ev->add_option("--out", ev.out, "Write the report here (else stdout)");
    c_ev->add_flag("--per-pair", ev.per_pair, "Also list per-pair scores");
    c_ev->add_flag("--show-reference", ev.show_reference,
                   "Append the published reference table");

    SynthArgs sy;
    CLI::App* c_sy = app.add_subcommand(
        "synth", "Generate a synthetic scene with exact flows and masks");
    c_sy->fallthrough();
    c_sy->add_option("--out", sy.out, "Output directory")->required();
    c_sy->add_option("--seed", sy.seed, "Scene seed")->capture_default_str();
    c_sy->add_option("--width", sy.width, "Canvas width")
        ->capture_default_str();
    c_sy->add_option("--height", sy.height, "Canvas height")
        ->capture_default_str();
    c_sy->add_option("--frames", sy.frames, "Frame count")
        ->capture_default_str();
    c_sy->add_option("--smoothing", sy.smoothing,
                     "Texture smoothing passes")
        ->capture_default_str();
    c_sy->add_option("--rect", sy.rects,
                     "Rectangle x0,y0,w,h,dx,dy (repeatable)");
    c_sy->add_flag("--static", sy.static_scene, "Zero all motions");
    c_sy->add_option("--styles", sy.styles,
                     "Also write this many style images")
        ->capture_default_str();

    FlowMaskArgs fm;
    CLI::App* c_fm = app.add_subcommand(
        "flow-masks", "Export disocclusion/boundary/weight masks as PGM");
    c_fm->fallthrough();
    c_fm->add_option("--flows", fm.flows_dir, "Flow directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    c_fm->add_option("--frames", fm.frames, "Frame count")->required();
    c_fm->add_option("--out", fm.out, "Output directory")->required();
    c_fm->add_option("--J,--offsets", fm.offsets, "Offsets to cover")
        ->capture_default_str();
    c_fm->add_flag("--no-compose", fm.no_compose,
                   "Do not compose missing long-range flows");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (c_img->parsed()) return run_stylize_image(img, c_img);
        if (c_vid->parsed()) return run_stylize_video(vid, c_vid);
        if (c_ev->parsed()) return run_evaluate(ev, c_ev);
        if (c_sy->parsed()) return run_synth(sy, c_sy);
        if (c_fm->parsed()) return run_flow_masks(fm, c_fm);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
