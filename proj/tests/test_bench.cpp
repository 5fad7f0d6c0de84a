#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "vst/bench.hpp"

using namespace vst;

namespace {

BenchTable simple_table() {
    BenchTable t;
    t.title = "demo";
    t.methods = {"hi", "mid", "lo"};
    t.scenes = {"s1", "s2"};
    t.cells = {{3.0, 30.0}, {2.0, 20.0}, {1.0, 10.0}};
    return t;
}

BoolMask strip_mask(int w, int h, int x_lo, int x_hi, int y_lo, int y_hi) {
    BoolMask m(w, h);
    for (int y = y_lo; y < y_hi; ++y)
        for (int x = x_lo; x < x_hi; ++x) m.set(x, y, true);
    return m;
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("warp-back error is zero for a static pair") {
    const Image f = testutil::random_image(6, 5, 3, 10);
    const std::vector<Image> seq{f, f};
    const SequenceScore s = warp_back_mse(seq, {testutil::constant_flow(6, 5)},
                                          {BoolMask(6, 5)});
    REQUIRE(s.pairs.size() == 1);
    CHECK(s.pairs[0].mse == 0.0);
    CHECK(s.pairs[0].included == 6 * 5 * 3);
    CHECK(s.mean_defined);
    CHECK(s.mean == 0.0);
}

TEST_CASE("warp-back error matches a hand-computed constant difference") {
    const Image a(6, 5, 3, 0.2);
    const Image b(6, 5, 3, 0.3);
    const SequenceScore s = warp_back_mse({a, b}, {testutil::constant_flow(6, 5)},
                                          {BoolMask(6, 5)});
    CHECK(s.pairs[0].mse == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("translated content scores zero once the lost column is excluded") {
    const int W = 8, H = 6;
    const Image earlier = testutil::random_image(W, H, 3, 11);
    Image later(W, H, 3, 0.42);
    for (int y = 0; y < H; ++y)
        for (int x = 1; x < W; ++x)
            for (int c = 0; c < 3; ++c)
                later.at(x, y, c) = earlier.at(x - 1, y, c);
    const FlowField flow = testutil::constant_flow(W, H, 1.0f, 0.0f);
    const BoolMask exclude = strip_mask(W, H, W - 1, W, 0, H);
    const SequenceScore s = warp_back_mse({earlier, later}, {flow}, {exclude});
    CHECK(s.pairs[0].mse == 0.0);
    CHECK(s.pairs[0].included == (W - 1) * H * 3);
}

TEST_CASE("excluded pixels do not enter the per-pair mean") {
    Image a(2, 1, 3, 0.5);
    Image b(2, 1, 3, 0.5);
    for (int c = 0; c < 3; ++c) b.at(1, 0, c) = 0.7;
    const FlowField zero = testutil::constant_flow(2, 1);
    SUBCASE("excluding the clean pixel keeps only the difference") {
        BoolMask m(2, 1);
        m.set(0, 0, true);
        const SequenceScore s = warp_back_mse({a, b}, {zero}, {m});
        CHECK(s.pairs[0].included == 3);
        CHECK(s.pairs[0].mse == doctest::Approx(0.04).epsilon(1e-12));
    }
    SUBCASE("excluding the differing pixel zeroes the score") {
        BoolMask m(2, 1);
        m.set(1, 0, true);
        const SequenceScore s = warp_back_mse({a, b}, {zero}, {m});
        CHECK(s.pairs[0].mse == 0.0);
    }
}

TEST_CASE("fully excluded pairs are skipped, not averaged") {
    const Image f1(4, 3, 3, 0.5);
    const Image f2(4, 3, 3, 0.5);
    const Image f3(4, 3, 3, 0.7);
    const FlowField zero = testutil::constant_flow(4, 3);
    const BoolMask all(4, 3, true);
    const BoolMask none(4, 3);
    SUBCASE("one pair masked out") {
        const SequenceScore s =
            warp_back_mse({f1, f2, f3}, {zero, zero}, {all, none});
        CHECK(s.pairs[0].skipped);
        CHECK(!s.pairs[1].skipped);
        CHECK(s.skipped_pairs == 1);
        CHECK(s.evaluated_pairs == 1);
        CHECK(s.mean_defined);
        CHECK(s.mean == doctest::Approx(0.04).epsilon(1e-12));
    }
    SUBCASE("every pair masked out leaves the mean undefined") {
        const SequenceScore s =
            warp_back_mse({f1, f2, f3}, {zero, zero}, {all, all});
        CHECK(s.evaluated_pairs == 0);
        CHECK(!s.mean_defined);
    }
}

TEST_CASE("warp-back input validation") {
    const Image f(4, 3, 3, 0.5);
    const FlowField zero = testutil::constant_flow(4, 3);
    const BoolMask none(4, 3);
    CHECK_THROWS_WITH_AS(warp_back_mse({f}, {}, {}),
                         doctest::Contains("at least two frames"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(warp_back_mse({f, f}, {}, {none}),
                         doctest::Contains("0 flows"), ValidationError);
    CHECK_THROWS_WITH_AS(warp_back_mse({f, Image(3, 3, 3)}, {zero}, {none}),
                         doctest::Contains("frame shapes differ"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(
        warp_back_mse({f, f}, {testutil::constant_flow(2, 2)}, {none}),
        doctest::Contains("does not match"), ValidationError);
}

TEST_CASE("style aggregation skips undefined means") {
    SequenceScore a;
    a.mean = 0.01;
    a.mean_defined = true;
    SequenceScore b;  // undefined
    SequenceScore c;
    c.mean = 0.03;
    c.mean_defined = true;
    CHECK(aggregate_styles({a, b, c}) == doctest::Approx(0.02).epsilon(1e-12));
    CHECK_THROWS_WITH_AS(aggregate_styles({b}),
                         doctest::Contains("no defined sequence means"),
                         ValidationError);
}

TEST_CASE("synthetic scenes are deterministic") {
    const SynthSceneConfig cfg = SynthSceneConfig::default_scene();
    const SynthScene s1 = generate_synth_scene(cfg);
    const SynthScene s2 = generate_synth_scene(cfg);
    REQUIRE(s1.frames.size() == s2.frames.size());
    for (size_t t = 0; t < s1.frames.size(); ++t)
        CHECK(s1.frames[t].data == s2.frames[t].data);
    for (size_t t = 0; t < s1.forward.size(); ++t) {
        CHECK(s1.forward[t].data == s2.forward[t].data);
        CHECK(s1.backward[t].data == s2.backward[t].data);
        CHECK(s1.occlusion[t].data == s2.occlusion[t].data);
        CHECK(s1.disocclusion[t].data == s2.disocclusion[t].data);
    }
}

TEST_CASE("the default scene has the documented shape") {
    const SynthSceneConfig cfg = SynthSceneConfig::default_scene();
    CHECK(cfg.width == 64);
    CHECK(cfg.height == 64);
    CHECK(cfg.frames == 5);
    const SynthScene s = generate_synth_scene(cfg);
    REQUIRE(s.frames.size() == 5);
    CHECK(s.forward.size() == 4);
    CHECK(s.backward.size() == 4);
    CHECK(s.occlusion.size() == 4);
    CHECK(s.disocclusion.size() == 4);
    CHECK(s.frames[0].width == 64);
    CHECK(s.frames[0].channels == 3);
    for (double v : s.frames[0].data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(s.frames[0].data != s.frames[1].data);  // something moved
}

TEST_CASE("integer-motion scene has exact analytic flows and masks") {
    SynthSceneConfig cfg;
    cfg.seed = 31;
    cfg.width = 32;
    cfg.height = 32;
    cfg.frames = 2;
    cfg.rects.push_back({6.0, 8.0, 10, 8, 2.0, 0.0});
    const SynthScene s = generate_synth_scene(cfg);

    // forward flow: (2,0) inside the frame-1 rectangle, zero elsewhere
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            const bool in0 = x >= 6 && x < 16 && y >= 8 && y < 16;
            const bool in1 = x >= 8 && x < 18 && y >= 8 && y < 16;
            CHECK(s.forward[0].u(x, y) == (in0 ? 2.0f : 0.0f));
            CHECK(s.forward[0].v(x, y) == 0.0f);
            CHECK(s.backward[0].u(x, y) == (in1 ? -2.0f : 0.0f));
        }
    // occlusion (earlier grid): background about to be covered, x in [16,18)
    CHECK(s.occlusion[0].data == strip_mask(32, 32, 16, 18, 8, 16).data);
    // disocclusion (later grid): newly revealed background, x in [6,8)
    CHECK(s.disocclusion[0].data == strip_mask(32, 32, 6, 8, 8, 16).data);
}

TEST_CASE("the flow-consistency detector reproduces the analytic masks") {
    SynthSceneConfig cfg;
    cfg.seed = 32;
    cfg.width = 32;
    cfg.height = 32;
    cfg.frames = 3;
    cfg.rects.push_back({6.0, 8.0, 10, 8, 2.0, 1.0});
    const SynthScene s = generate_synth_scene(cfg);
    for (size_t t = 0; t < s.forward.size(); ++t) {
        const BoolMask dis =
            disocclusion_mask(FlowPair{s.forward[t], s.backward[t]});
        CHECK(dis.data == s.disocclusion[t].data);
        // swapping the roles of the fields yields the earlier-grid mask
        const BoolMask occ =
            disocclusion_mask(FlowPair{s.backward[t], s.forward[t]});
        CHECK(occ.data == s.occlusion[t].data);
    }
}

TEST_CASE("a static rectangle produces zero flow and empty masks") {
    SynthSceneConfig cfg;
    cfg.width = 24;
    cfg.height = 24;
    cfg.frames = 3;
    cfg.rects.push_back({4.0, 4.0, 8, 8, 0.0, 0.0});
    const SynthScene s = generate_synth_scene(cfg);
    CHECK(s.frames[0].data == s.frames[2].data);
    for (size_t t = 0; t < s.forward.size(); ++t) {
        for (float v : s.forward[t].data) CHECK(v == 0.0f);
        for (float v : s.backward[t].data) CHECK(v == 0.0f);
        for (uint8_t b : s.occlusion[t].data) CHECK(b == 0);
        for (uint8_t b : s.disocclusion[t].data) CHECK(b == 0);
    }
}

TEST_CASE("subpixel motion keeps flows analytic") {
    SynthSceneConfig cfg;
    cfg.width = 32;
    cfg.height = 32;
    cfg.frames = 2;
    cfg.rects.push_back({6.0, 8.0, 10, 8, 0.5, 0.0});
    const SynthScene s = generate_synth_scene(cfg);
    // frame-1 rectangle covers [6,16); flow is exactly 0.5 there
    CHECK(s.forward[0].u(6, 8) == 0.5f);
    CHECK(s.forward[0].u(15, 8) == 0.5f);
    CHECK(s.forward[0].u(5, 8) == 0.0f);
    CHECK(s.forward[0].u(16, 8) == 0.0f);
    // frame-2 rectangle covers [6.5,16.5): integer pixels 7..16
    CHECK(s.backward[0].u(6, 8) == 0.0f);
    CHECK(s.backward[0].u(7, 8) == -0.5f);
    CHECK(s.backward[0].u(16, 8) == -0.5f);
    CHECK(s.backward[0].u(17, 8) == 0.0f);
    for (double v : s.frames[1].data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("scene validation rejects rectangles that leave the canvas") {
    SynthSceneConfig cfg;
    cfg.width = 64;
    cfg.height = 64;
    cfg.frames = 5;
    cfg.rects.push_back({50.0, 8.0, 10, 8, 2.0, 0.0});
    CHECK_THROWS_WITH_AS(generate_synth_scene(cfg),
                         doctest::Contains("leaves the canvas"),
                         ValidationError);
    SynthSceneConfig degenerate;
    degenerate.rects.push_back({0.0, 0.0, 0, 5, 0.0, 0.0});
    CHECK_THROWS_WITH_AS(degenerate.validate(),
                         doctest::Contains("degenerate"), ValidationError);
    SynthSceneConfig bad_frames;
    bad_frames.frames = 0;
    CHECK_THROWS_AS(bad_frames.validate(), ValidationError);
}

TEST_CASE("style stand-in images are deterministic and span their range") {
    const Image a = make_style_image(48, 32, 5);
    const Image b = make_style_image(48, 32, 5);
    const Image c = make_style_image(48, 32, 6);
    CHECK(a.data == b.data);
    CHECK(a.data != c.data);
    CHECK(a.channels == 3);
    double lo = 1.0, hi = 0.0;
    for (double v : a.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(hi == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bench table validation") {
    BenchTable t = simple_table();
    CHECK_NOTHROW(t.validate());
    SUBCASE("ragged rows") {
        t.cells[1].pop_back();
        CHECK_THROWS_WITH_AS(t.validate(),
                             doctest::Contains("one cell per scene"),
                             ValidationError);
    }
    SUBCASE("row count mismatch") {
        t.cells.pop_back();
        CHECK_THROWS_WITH_AS(t.validate(),
                             doctest::Contains("one cell row per method"),
                             ValidationError);
    }
    SUBCASE("labels with tabs or newlines") {
        t.scenes[0] = "s\t1";
        CHECK_THROWS_WITH_AS(t.validate(), doctest::Contains("free of tabs"),
                             ValidationError);
    }
    SUBCASE("empty labels") {
        t.methods[0] = "";
        CHECK_THROWS_AS(t.validate(), ValidationError);
    }
}

TEST_CASE("text rendering uses two significant digits") {
    BenchTable t;
    t.methods = {"only"};
    t.scenes = {"scene"};
    t.cells = {{0.00061}};
    const std::string text = format_text(t);
    CHECK(text.find("6.1e-04") != std::string::npos);
    CHECK(text.find("method") == 0);
    const std::string published = format_text(published_reference());
    CHECK(published.find("6.1e-04") != std::string::npos);
    CHECK(published.find("DeepFlow") != std::string::npos);
}

TEST_CASE("delimited rendering round-trips exactly") {
    const BenchTable& t = published_reference();
    const BenchTable back = parse_delimited(format_delimited(t));
    CHECK(back.title == t.title);
    CHECK(back.methods == t.methods);
    CHECK(back.scenes == t.scenes);
    REQUIRE(back.cells.size() == t.cells.size());
    for (size_t i = 0; i < t.cells.size(); ++i)
        for (size_t j = 0; j < t.cells[i].size(); ++j)
            CHECK(back.cells[i][j] == t.cells[i][j]);
}

TEST_CASE("delimited parsing rejects malformed input") {
    CHECK_THROWS_WITH_AS(parse_delimited(""),
                         doctest::Contains("missing header line"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(parse_delimited("wrong\ts1\n"),
                         doctest::Contains("start with 'method'"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(parse_delimited("method\ts1\nrow\t1\t2\n"),
                         doctest::Contains("wrong field count"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(parse_delimited("method\ts1\nrow\tabc\n"),
                         doctest::Contains("bad number"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_delimited("method\ts1\nrow\t1.5x\n"),
                         doctest::Contains("bad number"), ValidationError);
}

TEST_CASE("ordering checks flag exactly the out-of-order scenes") {
    const BenchTable t = simple_table();
    CHECK(ordering_violations(t, {"hi", "mid", "lo"}).empty());
    BenchTable bad = t;
    bad.cells[2][1] = 25.0;  // now lo > mid in scene s2
    const auto problems = ordering_violations(bad, {"hi", "mid", "lo"});
    REQUIRE(problems.size() == 1);
    CHECK(problems[0].find("s2") != std::string::npos);
    CHECK(problems[0].find("expected mid > lo") != std::string::npos);
    BenchTable tie = t;
    tie.cells[1][0] = 1.0;  // mid == lo in scene s1
    CHECK(ordering_violations(tie, {"hi", "mid", "lo"}).size() == 1);
    const auto missing = ordering_violations(t, {"hi", "ghost"});
    REQUIRE(missing.size() == 1);
    CHECK(missing[0].find("missing from table") != std::string::npos);
}

TEST_CASE("published reference scores keep their known shape and order") {
    const BenchTable& t = published_reference();
    CHECK_NOTHROW(t.validate());
    REQUIRE(t.methods.size() == 5);
    REQUIRE(t.scenes.size() == 5);
    CHECK(t.cells[0][0] == 0.00061);  // DeepFlow on alley_2
    // the three initialization baselines order strictly on every scene
    CHECK(ordering_violations(
              t, {"Init random", "Init prev", "Init prev warped"})
              .empty());
    // adding the flow-guided method ties on ambush_6, one violation
    const auto with_flow = ordering_violations(
        t, {"Init random", "Init prev", "Init prev warped", "DeepFlow"});
    REQUIRE(with_flow.size() == 1);
    CHECK(with_flow[0].find("ambush_6") != std::string::npos);
}

}  // TEST_SUITE("bench")
