#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vst/errors.hpp"

namespace vst {

/// Dense raster with values in [0,1], row-major, channel-interleaved.
/// Index layout: data[(y * width + x) * channels + c].
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c),
          data(static_cast<size_t>(w) * h * c, fill) {}

    double& at(int x, int y, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    double at(int x, int y, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }

    size_t size() const { return data.size(); }
    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

/// Per-pixel weights in [0,1], row-major. One value per pixel; callers
/// replicate across channels when applying to interleaved image data.
struct WeightMask {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    WeightMask() = default;
    WeightMask(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
};

/// Deterministic random source. The output sequence depends only on the
/// seed: the uniform and normal generators are built directly on the
/// mt19937_64 bit stream, so sequences are identical across platforms and
/// standard library implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed ? seed : 0x9E3779B97F4A7C15ull) {
        // mt19937_64-compatible seeding without depending on <random>
        // distribution implementations.
        mt_init(state_);
    }

    /// Uniform double in [0,1) with 53 random bits.
    double uniform();

    /// Standard normal deviate (Box-Muller).
    double normal();

    /// Normal deviate with given mean and standard deviation.
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Raw 64-bit draw.
    uint64_t next_u64();

private:
    void mt_init(uint64_t seed);

    uint64_t state_;
    uint64_t mt_[312];
    int mti_ = 313;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Mixes a stream index into a base seed; used to derive independent
/// per-frame generators from one run seed.
uint64_t derive_seed(uint64_t base, uint64_t stream);

// ---- Raster file I/O (binary PPM P6 / PGM P5, maxval 255) ----

/// Reads a binary P6 PPM with maxval 255. Values are scaled to [0,1].
/// Throws IoError with the byte offset of the first offending byte.
Image read_ppm(const std::string& path);

/// Writes a 3-channel image as binary P6; values are clamped to [0,1]
/// and quantized by round(v*255). Throws ValidationError if channels != 3.
void write_ppm(const Image& image, const std::string& path);

/// Reads a binary P5 PGM with maxval 255 into a per-pixel mask in [0,1].
WeightMask read_pgm(const std::string& path);

/// Writes a mask as binary P5 (0 -> black, 1 -> white).
void write_pgm(const WeightMask& mask, const std::string& path);

// ---- Pixel-space operations ----

/// I.i.d. Gaussian noise image, clamped to [0,1]. Deterministic for a
/// fixed seed. stddev must be >= 0.
Image gaussian_init(int width, int height, int channels, Rng& rng,
                    double mean, double stddev);

/// Per-component combination
///   scalar_a*mask*a + ((1-scalar_a) + scalar_a*(1-mask))*b
/// with the per-pixel mask replicated across channels. Coefficients sum
/// to one, so outputs of in-range inputs stay in [0,1].
Image blend(const Image& a, const Image& b, const WeightMask& mask_a,
            double scalar_a);

/// Bilinear resize (used to bring a style image to frame resolution).
Image resize_bilinear(const Image& src, int new_width, int new_height);

/// Mean squared error over all components of two same-shaped images.
double image_mse(const Image& a, const Image& b);

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace vst
