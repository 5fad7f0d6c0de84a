#include <cmath>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "vst/features.hpp"

using namespace vst;

namespace {

ExtractorConfig single_stage(int in, int out, bool pool = false,
                             uint64_t seed = 5) {
    ExtractorConfig cfg;
    cfg.seed = seed;
    cfg.stages.push_back({in, out, pool});
    return cfg;
}

// L(x) = sum over layers of <U_l, F_l(x)>, a fixed linear functional of the
// rectified activations; its input gradient is backward(x, U).
double probe_loss(const Extractor& e, const Image& x,
                  const std::vector<std::pair<int, FeatureMap>>& upstream) {
    std::vector<int> layers;
    for (const auto& [l, fm] : upstream) layers.push_back(l);
    const FeatureStack stack = e.forward(x, layers);
    double acc = 0.0;
    for (const auto& [l, u] : upstream) {
        const FeatureMap* f = stack.find(l);
        REQUIRE(f != nullptr);
        for (size_t i = 0; i < u.data.size(); ++i) acc += u.data[i] * f->data[i];
    }
    return acc;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("compact default architecture and pooling factor") {
    const ExtractorConfig cfg = ExtractorConfig::compact_default();
    REQUIRE(cfg.stages.size() == 4);
    CHECK(cfg.stages[0].in_channels == 3);
    CHECK(cfg.stages[0].out_channels == 8);
    CHECK(cfg.stages[1].out_channels == 8);
    CHECK(cfg.stages[2].out_channels == 16);
    CHECK(cfg.stages[3].out_channels == 16);
    CHECK(cfg.stages[0].pool_after);
    CHECK(cfg.stages[1].pool_after);
    CHECK(!cfg.stages[2].pool_after);
    CHECK(!cfg.stages[3].pool_after);
    const Extractor e = Extractor::build(cfg);
    CHECK(e.pooling_factor() == 4);
    CHECK(e.num_layers() == 4);
}

TEST_CASE("build is deterministic in the seed and filters are unit-norm") {
    const Extractor a = Extractor::build(ExtractorConfig::compact_default());
    const Extractor b = Extractor::build(ExtractorConfig::compact_default());
    CHECK(a.weights() == b.weights());

    ExtractorConfig other = ExtractorConfig::compact_default();
    other.seed = 1234;
    const Extractor c = Extractor::build(other);
    CHECK(a.weights() != c.weights());

    for (size_t s = 0; s < a.config().stages.size(); ++s) {
        const auto& st = a.config().stages[s];
        const auto& w = a.weights()[s];
        const size_t per_filter = static_cast<size_t>(st.in_channels) * 9;
        for (int o = 0; o < st.out_channels; ++o) {
            double norm2 = 0.0;
            for (size_t i = 0; i < per_filter; ++i) {
                const double v = w[o * per_filter + i];
                norm2 += v * v;
            }
            CHECK(norm2 == doctest::Approx(1.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("config validation rejects broken channel chains") {
    ExtractorConfig cfg;
    cfg.stages.push_back({3, 8, true});
    cfg.stages.push_back({16, 16, false});
    CHECK_THROWS_WITH_AS(Extractor::build(cfg),
                         doctest::Contains("channel chain"), ValidationError);
    ExtractorConfig empty;
    CHECK_THROWS_AS(Extractor::build(empty), ValidationError);
}

TEST_CASE("layer shapes follow the pooling schedule") {
    const Extractor e = Extractor::build(ExtractorConfig::compact_default());
    const Image img = testutil::random_image(64, 64, 3, 50);
    const FeatureStack stack = e.forward(img, {1, 2, 3, 4});
    const FeatureMap* l1 = stack.find(1);
    const FeatureMap* l2 = stack.find(2);
    const FeatureMap* l3 = stack.find(3);
    const FeatureMap* l4 = stack.find(4);
    REQUIRE(l1 != nullptr);
    REQUIRE(l4 != nullptr);
    CHECK(l1->channels == 8);
    CHECK(l1->width == 64);
    CHECK(l2->width == 32);
    CHECK(l3->width == 16);  // two 2x pools ahead of stage 3
    CHECK(l3->height == 16);
    CHECK(l3->channels == 16);
    CHECK(l4->width == 16);
}

TEST_CASE("zero input produces zero features") {
    const Extractor e = Extractor::build(ExtractorConfig::compact_default());
    const FeatureStack stack = e.forward(Image(16, 16, 3), {1, 2, 3, 4});
    for (const auto& [l, fm] : stack.layers)
        for (double v : fm.data) CHECK(v == 0.0);
}

TEST_CASE("forward is deterministic") {
    const Extractor e = Extractor::build(ExtractorConfig::compact_default());
    const Image img = testutil::random_image(16, 16, 3, 51);
    const FeatureStack a = e.forward(img, {1, 3});
    const FeatureStack b = e.forward(img, {1, 3});
    REQUIRE(a.layers.size() == b.layers.size());
    for (size_t i = 0; i < a.layers.size(); ++i)
        CHECK(a.layers[i].second.data == b.layers[i].second.data);
}

TEST_CASE("doubling the input doubles every activation") {
    const Extractor e = Extractor::build(ExtractorConfig::compact_default());
    Image img = testutil::random_image(16, 16, 3, 52, 0.0, 0.5);
    Image doubled = img;
    for (auto& v : doubled.data) v *= 2.0;
    const FeatureStack fa = e.forward(img, {1, 2, 3, 4});
    const FeatureStack fb = e.forward(doubled, {1, 2, 3, 4});
    for (size_t l = 0; l < fa.layers.size(); ++l) {
        const auto& a = fa.layers[l].second.data;
        const auto& b = fb.layers[l].second.data;
        for (size_t i = 0; i < a.size(); ++i)
            CHECK(b[i] == doctest::Approx(2.0 * a[i]).epsilon(1e-9));
    }
}

TEST_CASE("identity kernels reproduce the input channels") {
    ExtractorConfig cfg = single_stage(3, 3);
    std::vector<double> w(3 * 3 * 9, 0.0);
    for (int o = 0; o < 3; ++o)
        w[((static_cast<size_t>(o) * 3 + o) * 3 + 1) * 3 + 1] = 1.0;  // center tap
    const Extractor e = Extractor::from_weights(cfg, {w});
    const Image img = testutil::random_image(6, 5, 3, 53);
    const FeatureStack stack = e.forward(img, {1});
    const FeatureMap* f = stack.find(1);
    REQUIRE(f != nullptr);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 6; ++x)
            for (int c = 0; c < 3; ++c)
                CHECK(f->at(c, x, y) == doctest::Approx(img.at(x, y, c)));
}

TEST_CASE("backward of zero upstream is zero") {
    const Extractor e = Extractor::build(ExtractorConfig::compact_default());
    const Image img = testutil::random_image(16, 16, 3, 54);
    std::vector<std::pair<int, FeatureMap>> up;
    up.emplace_back(3, FeatureMap(16, 4, 4));
    const Image g = e.backward(img, up);
    for (double v : g.data) CHECK(v == 0.0);
}

TEST_CASE("single-layer impulse gradient is confined to the 3x3 receptive field") {
    const Extractor e = Extractor::build(single_stage(3, 4));
    const Image img = testutil::random_image(9, 8, 3, 55, 0.1, 0.9);
    // pick an interior unit the rectifier leaves active, so the impulse
    // actually propagates
    const FeatureStack stack = e.forward(img, {1});
    const FeatureMap* f = stack.find(1);
    REQUIRE(f != nullptr);
    int cx = -1, cy = -1, ch = -1;
    for (int y = 1; y < 7 && ch < 0; ++y)
        for (int x = 1; x < 8 && ch < 0; ++x)
            for (int c = 0; c < 4 && ch < 0; ++c)
                if (f->at(c, x, y) > 0.0) {
                    cx = x;
                    cy = y;
                    ch = c;
                }
    REQUIRE(ch >= 0);
    FeatureMap up(4, 9, 8);
    up.at(ch, cx, cy) = 1.0;
    std::vector<std::pair<int, FeatureMap>> upstream;
    upstream.emplace_back(1, up);
    const Image g = e.backward(img, upstream);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 9; ++x) {
            const bool inside = std::abs(x - cx) <= 1 && std::abs(y - cy) <= 1;
            for (int c = 0; c < 3; ++c) {
                if (!inside) CHECK(g.at(x, y, c) == 0.0);
            }
        }
    double inside_mag = 0.0;
    for (int y = cy - 1; y <= cy + 1; ++y)
        for (int x = cx - 1; x <= cx + 1; ++x)
            for (int c = 0; c < 3; ++c) inside_mag += std::abs(g.at(x, y, c));
    CHECK(inside_mag > 0.0);
}

TEST_CASE("backward matches central finite differences on a linear probe") {
    const Extractor e = Extractor::build(ExtractorConfig::compact_default());
    Image x = testutil::random_image(12, 12, 3, 56, 0.1, 0.9);
    Rng rng(57);
    std::vector<std::pair<int, FeatureMap>> upstream;
    const FeatureStack shapes = e.forward(x, {1, 2, 3, 4});
    for (const auto& [l, fm] : shapes.layers) {
        FeatureMap u(fm.channels, fm.width, fm.height);
        for (auto& v : u.data) v = rng.normal() * 0.5;
        upstream.emplace_back(l, u);
    }
    const Image analytic = e.backward(x, upstream);
    const double h = 1e-3;
    double max_rel = 0.0;
    for (int probe = 0; probe < 60; ++probe) {
        const size_t i = rng.next_u64() % x.data.size();
        const double keep = x.data[i];
        x.data[i] = keep + h;
        const double fp = probe_loss(e, x, upstream);
        x.data[i] = keep - h;
        const double fm_ = probe_loss(e, x, upstream);
        x.data[i] = keep;
        const double fd = (fp - fm_) / (2.0 * h);
        const double a = analytic.data[i];
        const double rel =
            std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-8});
        max_rel = std::max(max_rel, rel);
    }
    CHECK(max_rel < 1e-4);
}

TEST_CASE("backward overloads agree") {
    const Extractor e = Extractor::build(ExtractorConfig::compact_default());
    const Image img = testutil::random_image(16, 16, 3, 58);
    Rng rng(59);
    const FeatureStack shapes = e.forward(img, {2, 4});
    std::vector<std::pair<int, FeatureMap>> upstream;
    for (const auto& [l, fm] : shapes.layers) {
        FeatureMap u(fm.channels, fm.width, fm.height);
        for (auto& v : u.data) v = rng.normal();
        upstream.emplace_back(l, u);
    }
    const Extractor::Trace tr = e.trace(img);
    const Image g1 = e.backward(tr, upstream);
    const Image g2 = e.backward(img, upstream);
    CHECK(g1.data == g2.data);
}

TEST_CASE("forward rejects sizes indivisible by the pooling factor") {
    const Extractor e = Extractor::build(ExtractorConfig::compact_default());
    CHECK_THROWS_WITH_AS(e.forward(Image(15, 15, 3), {1}),
                         doctest::Contains("pad to 16x16"), ValidationError);
}

TEST_CASE("layer requests outside the architecture are rejected") {
    const Extractor e = Extractor::build(ExtractorConfig::compact_default());
    CHECK_THROWS_AS(e.forward(Image(16, 16, 3), {5}), ValidationError);
    CHECK_THROWS_AS(e.forward(Image(16, 16, 3), {0}), ValidationError);
}

}  // TEST_SUITE("features")
