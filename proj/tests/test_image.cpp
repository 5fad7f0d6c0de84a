#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "vst/image.hpp"

using namespace vst;
using testutil::TempDir;

TEST_SUITE("image") {

TEST_CASE("read_ppm decodes a minimal P6 file") {
    TempDir td("ppm_read");
    const std::string path = td.file("a.ppm");
    testutil::write_bytes(
        path, std::string("P6\n2 1\n255\n") + std::string("\xff\x00\x00", 3) +
                  std::string("\x00\x00\x00", 3));
    const Image img = read_ppm(path);
    CHECK(img.width == 2);
    CHECK(img.height == 1);
    CHECK(img.channels == 3);
    CHECK(img.data == std::vector<double>{1, 0, 0, 0, 0, 0});
}

TEST_CASE("read_ppm handles header comments and odd whitespace") {
    TempDir td("ppm_ws");
    const std::string path = td.file("a.ppm");
    testutil::write_bytes(path, std::string("P6 # comment\n# more\n 1\t1 \n255 ") +
                                    std::string("\x80\x80\x80", 3));
    const Image img = read_ppm(path);
    CHECK(img.width == 1);
    CHECK(img.data[0] == doctest::Approx(128.0 / 255.0));
}

TEST_CASE("read_ppm rejects grayscale (P5) input") {
    TempDir td("ppm_p5");
    const std::string path = td.file("g.ppm");
    testutil::write_bytes(path, std::string("P5\n1 1\n255\n\x00", 12));
    CHECK_THROWS_WITH_AS(read_ppm(path),
                         doctest::Contains("unsupported format"), IoError);
}

TEST_CASE("read_ppm names the byte offset of the defect") {
    TempDir td("ppm_bad");
    SUBCASE("unsupported maxval") {
        const std::string path = td.file("m.ppm");
        testutil::write_bytes(path, "P6\n1 1\n65535\n...");
        CHECK_THROWS_WITH_AS(read_ppm(path),
                             doctest::Contains("unsupported maxval"), IoError);
        CHECK_THROWS_WITH_AS(read_ppm(path), doctest::Contains("at byte 7"),
                             IoError);
    }
    SUBCASE("truncated payload") {
        const std::string path = td.file("t.ppm");
        testutil::write_bytes(path, std::string("P6\n2 2\n255\n") +
                                        std::string(5, '\x10'));
        CHECK_THROWS_WITH_AS(read_ppm(path),
                             doctest::Contains("truncated payload"), IoError);
    }
    SUBCASE("malformed width") {
        const std::string path = td.file("w.ppm");
        testutil::write_bytes(path, "P6\nxx 1\n255\n...");
        CHECK_THROWS_AS(read_ppm(path), IoError);
    }
}

TEST_CASE("ppm round trip is the identity on the 8-bit grid") {
    TempDir td("ppm_rt");
    Image img(5, 4, 3);
    Rng rng(123);
    for (auto& v : img.data) v = std::round(rng.uniform() * 255.0) / 255.0;
    const std::string path = td.file("rt.ppm");
    write_ppm(img, path);
    const Image back = read_ppm(path);
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.data == img.data);
}

TEST_CASE("write_ppm emits clamped, rounded bytes") {
    TempDir td("ppm_write");
    SUBCASE("all-zero image payload is all zero bytes") {
        Image z(4, 4, 3);
        const std::string path = td.file("z.ppm");
        write_ppm(z, path);
        const std::string bytes = testutil::read_bytes(path);
        REQUIRE(bytes.size() >= 48);
        CHECK(bytes.substr(0, 2) == "P6");
        for (size_t i = bytes.size() - 48; i < bytes.size(); ++i)
            CHECK(bytes[i] == '\0');
    }
    SUBCASE("0.5 quantizes to 128, out-of-range values clamp") {
        Image px(1, 1, 3);
        px.data = {0.5, 1.2, -0.3};
        const std::string path = td.file("q.ppm");
        write_ppm(px, path);
        const std::string bytes = testutil::read_bytes(path);
        REQUIRE(bytes.size() >= 3);
        const auto* p =
            reinterpret_cast<const unsigned char*>(bytes.data()) + bytes.size() - 3;
        CHECK(p[0] == 128);
        CHECK(p[1] == 255);
        CHECK(p[2] == 0);
    }
    SUBCASE("non-3-channel images are rejected") {
        Image g(2, 2, 1);
        CHECK_THROWS_AS(write_ppm(g, td.file("g.ppm")), ValidationError);
    }
}

TEST_CASE("pgm round trip preserves masks on the 8-bit grid") {
    TempDir td("pgm_rt");
    WeightMask m(4, 3);
    Rng rng(9);
    for (auto& v : m.data) v = std::round(rng.uniform() * 255.0) / 255.0;
    const std::string path = td.file("m.pgm");
    write_pgm(m, path);
    const WeightMask back = read_pgm(path);
    CHECK(back.width == 4);
    CHECK(back.height == 3);
    CHECK(back.data == m.data);
}

TEST_CASE("gaussian_init: zero stddev yields the constant mean") {
    Rng rng(1);
    const Image img = gaussian_init(3, 2, 3, rng, 0.5, 0.0);
    for (double v : img.data) CHECK(v == 0.5);
}

TEST_CASE("gaussian_init is deterministic in the seed") {
    Rng a(42), b(42), c(43);
    const Image ia = gaussian_init(8, 8, 3, a, 0.5, 0.1);
    const Image ib = gaussian_init(8, 8, 3, b, 0.5, 0.1);
    const Image ic = gaussian_init(8, 8, 3, c, 0.5, 0.1);
    CHECK(ia.data == ib.data);
    CHECK(ia.data != ic.data);
}

TEST_CASE("gaussian_init sample statistics and range") {
    Rng rng(7);
    const Image img = gaussian_init(64, 64, 3, rng, 0.5, 0.1);
    double sum = 0.0;
    for (double v : img.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        sum += v;
    }
    CHECK(std::abs(sum / static_cast<double>(img.size()) - 0.5) < 0.01);
}

TEST_CASE("gaussian_init rejects negative stddev") {
    Rng rng(1);
    CHECK_THROWS_AS(gaussian_init(2, 2, 3, rng, 0.5, -0.1), ValidationError);
}

TEST_CASE("blend degenerate masks") {
    const Image a = testutil::random_image(4, 3, 3, 11);
    const Image b = testutil::random_image(4, 3, 3, 12);
    SUBCASE("mask 1, scalar 1 returns the first image") {
        const Image out = blend(a, b, testutil::full_mask(4, 3, 1.0), 1.0);
        CHECK(out.data == a.data);
    }
    SUBCASE("mask 0 returns the second image for any scalar") {
        for (double s : {0.0, 0.3, 1.0}) {
            const Image out = blend(a, b, testutil::full_mask(4, 3, 0.0), s);
            CHECK(testutil::max_abs_diff(out.data, b.data) < 1e-12);
        }
    }
}

TEST_CASE("blend hand value: ones over zeros at one half") {
    const Image a(4, 3, 3, 1.0);
    const Image b(4, 3, 3, 0.0);
    const Image out = blend(a, b, testutil::full_mask(4, 3, 1.0), 0.5);
    for (double v : out.data) CHECK(v == 0.5);
}

TEST_CASE("blend of an image with itself is that image") {
    const Image a = testutil::random_image(5, 4, 3, 21);
    Rng rng(22);
    WeightMask m(5, 4);
    for (auto& v : m.data) v = rng.uniform();
    for (double s : {0.0, 0.25, 0.7, 1.0}) {
        const Image out = blend(a, a, m, s);
        CHECK(testutil::max_abs_diff(out.data, a.data) < 1e-12);
    }
}

TEST_CASE("blend rejects shape mismatches") {
    const Image a(4, 3, 3), b(3, 4, 3);
    CHECK_THROWS_AS(blend(a, b, testutil::full_mask(4, 3), 0.5),
                    ValidationError);
    CHECK_THROWS_AS(blend(a, a, testutil::full_mask(2, 2), 0.5),
                    ValidationError);
}

TEST_CASE("resize_bilinear basics") {
    SUBCASE("constant image stays constant at any size") {
        const Image c(6, 5, 3, 0.37);
        const Image out = resize_bilinear(c, 9, 4);
        CHECK(out.width == 9);
        CHECK(out.height == 4);
        for (double v : out.data) CHECK(v == doctest::Approx(0.37));
    }
    SUBCASE("same-size resize is the identity") {
        const Image a = testutil::random_image(7, 5, 3, 31);
        const Image out = resize_bilinear(a, 7, 5);
        CHECK(testutil::max_abs_diff(out.data, a.data) < 1e-12);
    }
}

TEST_CASE("image_mse hand value and shape check") {
    Image a(2, 1, 3, 0.0), b(2, 1, 3, 0.0);
    b.data[0] = 0.3;
    CHECK(image_mse(a, b) == doctest::Approx(0.3 * 0.3 / 6.0));
    CHECK_THROWS_AS(image_mse(a, Image(1, 1, 3)), ValidationError);
}

TEST_CASE("derive_seed separates streams and stays deterministic") {
    CHECK(derive_seed(20177, 0) == derive_seed(20177, 0));
    CHECK(derive_seed(20177, 0) != derive_seed(20177, 1));
    CHECK(derive_seed(20177, 1) != derive_seed(20178, 1));
}

TEST_CASE("rng uniform stays in [0,1) and is reproducible") {
    Rng a(5), b(5);
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(u == b.uniform());
    }
}

}  // TEST_SUITE("image")
