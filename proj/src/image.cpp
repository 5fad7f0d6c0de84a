#include "vst/image.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace vst {

// ---- Rng: MT19937-64 core with explicit uniform/normal construction ----

namespace {
constexpr int kMtN = 312;
constexpr int kMtM = 156;
constexpr uint64_t kMatrixA = 0xB5026F5AA96619E9ull;
constexpr uint64_t kUpperMask = 0xFFFFFFFF80000000ull;
constexpr uint64_t kLowerMask = 0x7FFFFFFFull;
}  // namespace

void Rng::mt_init(uint64_t seed) {
    mt_[0] = seed;
    for (int i = 1; i < kMtN; ++i) {
        mt_[i] = 6364136223846793005ull * (mt_[i - 1] ^ (mt_[i - 1] >> 62)) +
                 static_cast<uint64_t>(i);
    }
    mti_ = kMtN;
    have_spare_ = false;
}

uint64_t Rng::next_u64() {
    if (mti_ >= kMtN) {
        static const uint64_t mag01[2] = {0ull, kMatrixA};
        int i;
        uint64_t x;
        for (i = 0; i < kMtN - kMtM; ++i) {
            x = (mt_[i] & kUpperMask) | (mt_[i + 1] & kLowerMask);
            mt_[i] = mt_[i + kMtM] ^ (x >> 1) ^ mag01[x & 1ull];
        }
        for (; i < kMtN - 1; ++i) {
            x = (mt_[i] & kUpperMask) | (mt_[i + 1] & kLowerMask);
            mt_[i] = mt_[i + (kMtM - kMtN)] ^ (x >> 1) ^ mag01[x & 1ull];
        }
        x = (mt_[kMtN - 1] & kUpperMask) | (mt_[0] & kLowerMask);
        mt_[kMtN - 1] = mt_[kMtM - 1] ^ (x >> 1) ^ mag01[x & 1ull];
        mti_ = 0;
    }
    uint64_t x = mt_[mti_++];
    x ^= (x >> 29) & 0x5555555555555555ull;
    x ^= (x << 17) & 0x71D67FFFEDA60000ull;
    x ^= (x << 37) & 0xFFF7EEE000000000ull;
    x ^= (x >> 43);
    return x;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // u1 in (0,1] so log() stays finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) *
                (1.0 / 9007199254740992.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

uint64_t derive_seed(uint64_t base, uint64_t stream) {
    // splitmix64 finalizer over a golden-ratio offset stream.
    uint64_t z = base + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// ---- PNM parsing ----

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct PnmHeader {
    int width = 0;
    int height = 0;
    size_t payload_offset = 0;
};

[[noreturn]] void fail(const std::string& path, const std::string& what,
                       size_t offset) {
    throw IoError(path + ": " + what + " at byte " + std::to_string(offset));
}

// Skips PNM whitespace and '#' comments; returns offset of next token byte.
size_t skip_separators(const std::string& buf, size_t pos) {
    while (pos < buf.size()) {
        char c = buf[pos];
        if (c == '#') {
            while (pos < buf.size() && buf[pos] != '\n') ++pos;
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            ++pos;
        } else {
            break;
        }
    }
    return pos;
}

int parse_int(const std::string& buf, size_t& pos, const std::string& path,
              const char* field) {
    pos = skip_separators(buf, pos);
    if (pos >= buf.size()) fail(path, std::string("missing ") + field, pos);
    if (buf[pos] < '0' || buf[pos] > '9')
        fail(path, std::string("malformed ") + field, pos);
    long v = 0;
    while (pos < buf.size() && buf[pos] >= '0' && buf[pos] <= '9') {
        v = v * 10 + (buf[pos] - '0');
        if (v > 1000000000L) fail(path, std::string(field) + " out of range", pos);
        ++pos;
    }
    return static_cast<int>(v);
}

PnmHeader parse_pnm(const std::string& buf, const std::string& path,
                    const char* want_magic, const char* reject_magic,
                    const char* reject_name) {
    if (buf.size() < 2) fail(path, "missing magic", 0);
    if (buf[0] == reject_magic[0] && buf[1] == reject_magic[1])
        fail(path, std::string("unsupported format ") + reject_name, 0);
    if (buf[0] != want_magic[0] || buf[1] != want_magic[1])
        fail(path, std::string("bad magic, expected ") + want_magic, 0);
    size_t pos = 2;
    PnmHeader h;
    h.width = parse_int(buf, pos, path, "width");
    h.height = parse_int(buf, pos, path, "height");
    size_t maxval_pos = skip_separators(buf, pos);
    int maxval = parse_int(buf, pos, path, "maxval");
    if (maxval != 255)
        fail(path, "unsupported maxval " + std::to_string(maxval), maxval_pos);
    if (h.width <= 0 || h.height <= 0) fail(path, "bad dimensions", 2);
    if (pos >= buf.size()) fail(path, "truncated after maxval", pos);
    // Exactly one whitespace byte separates the header from the payload.
    ++pos;
    h.payload_offset = pos;
    return h;
}

}  // namespace

Image read_ppm(const std::string& path) {
    const std::string buf = read_file(path);
    PnmHeader h = parse_pnm(buf, path, "P6", "P5", "P5 (grayscale)");
    const size_t need = static_cast<size_t>(h.width) * h.height * 3;
    if (buf.size() - h.payload_offset < need)
        fail(path,
             "truncated payload, need " + std::to_string(need) + " bytes",
             buf.size());
    Image img(h.width, h.height, 3);
    const unsigned char* p =
        reinterpret_cast<const unsigned char*>(buf.data()) + h.payload_offset;
    for (size_t i = 0; i < need; ++i)
        img.data[i] = static_cast<double>(p[i]) / 255.0;
    return img;
}

void write_ppm(const Image& image, const std::string& path) {
    if (image.channels != 3)
        throw ValidationError(path + ": PPM output requires 3 channels, got " +
                              std::to_string(image.channels));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    std::vector<unsigned char> bytes(image.data.size());
    for (size_t i = 0; i < image.data.size(); ++i)
        bytes[i] =
            static_cast<unsigned char>(std::lround(clamp01(image.data[i]) * 255.0));
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(path + ": write failed");
}

WeightMask read_pgm(const std::string& path) {
    const std::string buf = read_file(path);
    PnmHeader h = parse_pnm(buf, path, "P5", "P6", "P6 (color)");
    const size_t need = static_cast<size_t>(h.width) * h.height;
    if (buf.size() - h.payload_offset < need)
        fail(path,
             "truncated payload, need " + std::to_string(need) + " bytes",
             buf.size());
    WeightMask m(h.width, h.height);
    const unsigned char* p =
        reinterpret_cast<const unsigned char*>(buf.data()) + h.payload_offset;
    for (size_t i = 0; i < need; ++i)
        m.data[i] = static_cast<double>(p[i]) / 255.0;
    return m;
}

void write_pgm(const WeightMask& mask, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << "P5\n" << mask.width << " " << mask.height << "\n255\n";
    std::vector<unsigned char> bytes(mask.data.size());
    for (size_t i = 0; i < mask.data.size(); ++i)
        bytes[i] =
            static_cast<unsigned char>(std::lround(clamp01(mask.data[i]) * 255.0));
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(path + ": write failed");
}

// ---- Pixel-space operations ----

Image gaussian_init(int width, int height, int channels, Rng& rng,
                    double mean, double stddev) {
    if (stddev < 0.0)
        throw ValidationError("gaussian_init: stddev must be >= 0");
    Image img(width, height, channels);
    for (auto& v : img.data) v = clamp01(rng.normal(mean, stddev));
    return img;
}

Image blend(const Image& a, const Image& b, const WeightMask& mask_a,
            double scalar_a) {
    if (!a.same_shape(b) || mask_a.width != a.width || mask_a.height != a.height)
        throw ValidationError("blend: shape mismatch");
    Image out(a.width, a.height, a.channels);
    const double d = scalar_a;
    size_t i = 0;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) {
            const double c = mask_a.at(x, y);
            const double wa = d * c;
            const double wb = (1.0 - d) + d * (1.0 - c);
            for (int ch = 0; ch < a.channels; ++ch, ++i)
                out.data[i] = wa * a.data[i] + wb * b.data[i];
        }
    return out;
}

Image resize_bilinear(const Image& src, int new_width, int new_height) {
    if (new_width <= 0 || new_height <= 0)
        throw ValidationError("resize_bilinear: bad target size");
    if (new_width == src.width && new_height == src.height) return src;
    Image out(new_width, new_height, src.channels);
    const double sx = static_cast<double>(src.width) / new_width;
    const double sy = static_cast<double>(src.height) / new_height;
    for (int y = 0; y < new_height; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        if (fy < 0) fy = 0;
        if (fy > src.height - 1) fy = src.height - 1;
        int y0 = static_cast<int>(fy);
        if (y0 > src.height - 2) y0 = src.height > 1 ? src.height - 2 : 0;
        int y1 = src.height > 1 ? y0 + 1 : y0;
        double wy = fy - y0;
        for (int x = 0; x < new_width; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            if (fx < 0) fx = 0;
            if (fx > src.width - 1) fx = src.width - 1;
            int x0 = static_cast<int>(fx);
            if (x0 > src.width - 2) x0 = src.width > 1 ? src.width - 2 : 0;
            int x1 = src.width > 1 ? x0 + 1 : x0;
            double wx = fx - x0;
            for (int c = 0; c < src.channels; ++c) {
                double top = (1 - wx) * src.at(x0, y0, c) + wx * src.at(x1, y0, c);
                double bot = (1 - wx) * src.at(x0, y1, c) + wx * src.at(x1, y1, c);
                out.at(x, y, c) = (1 - wy) * top + wy * bot;
            }
        }
    }
    return out;
}

double image_mse(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw ValidationError("image_mse: shape mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.data.size());
}

}  // namespace vst
