#pragma once

#include <cstdint>
#include <cmath>

namespace superflow {

// splitmix64 mixer; also used to derive independent stream seeds from
// (master seed, stream index) pairs.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s = master ^ (0x9E3779B97F4A7C15ULL * (index + 1));
    std::uint64_t b = splitmix64(s);
    return a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
}

// xoshiro256++ with splitmix64 seeding. All floating-point draws are built
// from the raw 64-bit output, so streams are bit-stable across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 1) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
        have_spare_ = false;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform on [0, 1)
    double uniform() {
        return double(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform on (0, 1]; safe to pass to log()
    double uniform_pos() {
        return double((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via a 128-layer ziggurat; one raw draw on the fast path
    double normal() {
        const Ziggurat& z = ziggurat();
        for (;;) {
            const std::uint64_t bits = next_u64();
            const int i = int(bits & 127);
            // signed uniform in (-1, 1) from the top 53 bits
            const double u = double(std::int64_t(bits >> 11) - (std::int64_t(1) << 52)) *
                             0x1.0p-52;
            if (std::abs(u) < z.ratio[i]) return u * z.x[i];
            if (i == 0) return normal_tail(z.r, u < 0.0);
            const double x = u * z.x[i];
            const double f0 = std::exp(-0.5 * (z.x[i] * z.x[i] - x * x));
            const double f1 = std::exp(-0.5 * (z.x[i + 1] * z.x[i + 1] - x * x));
            if (f1 + uniform() * (f0 - f1) < 1.0) return x;
        }
    }

    // polar method; kept as an independent cross-check of the ziggurat
    double normal_polar() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, q;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            q = u * u + v * v;
        } while (q >= 1.0 || q == 0.0);
        const double f = std::sqrt(-2.0 * std::log(q) / q);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

    // integer in [0, n)
    std::uint64_t bounded(std::uint64_t n) { return next_u64() % n; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    struct Ziggurat {
        double x[129];
        double ratio[128];
        double r;
    };

    static const Ziggurat& ziggurat() {
        static const Ziggurat z = [] {
            Ziggurat t;
            t.r = 3.442619855899;
            const double area = 9.91256303526217e-3;
            double f = std::exp(-0.5 * t.r * t.r);
            t.x[0] = area / f;  // base strip
            t.x[1] = t.r;
            t.x[128] = 0.0;
            for (int i = 2; i < 128; ++i) {
                t.x[i] = std::sqrt(-2.0 * std::log(area / t.x[i - 1] + f));
                f = std::exp(-0.5 * t.x[i] * t.x[i]);
            }
            for (int i = 0; i < 128; ++i) t.ratio[i] = t.x[i + 1] / t.x[i];
            return t;
        }();
        return z;
    }

    double normal_tail(double r, bool negative) {
        double x, y;
        do {
            x = -std::log(uniform_pos()) / r;
            y = -std::log(uniform_pos());
        } while (y + y < x * x);
        return negative ? -(r + x) : (r + x);
    }

    std::uint64_t s_[4]{};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace superflow
