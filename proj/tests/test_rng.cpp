#include "doctest.h"

#include <cmath>

#include "superflow/rng.hpp"

using namespace superflow;

TEST_CASE("stream seeding is stable and decorrelated") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
    bool differ = false;
    Rng a2(42);
    for (int i = 0; i < 64; ++i) differ |= (a2.next_u64() != c.next_u64());
    CHECK(differ);
    CHECK(derive_stream_seed(1, 2) != derive_stream_seed(1, 3));
    CHECK(derive_stream_seed(1, 2) != derive_stream_seed(2, 2));
}

TEST_CASE("ziggurat normals have the right moments and tails") {
    Rng rng(20240817);
    const int n = 4000000;
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    int tail2 = 0, tail3 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s1 += z;
        s2 += z * z;
        s3 += z * z * z;
        s4 += z * z * z * z;
        if (std::abs(z) > 2.0) ++tail2;
        if (z > 3.0) ++tail3;
    }
    const double mean = s1 / n;
    const double var = s2 / n - mean * mean;
    const double skew = s3 / n;
    const double kurt = s4 / n;
    CHECK(std::abs(mean) < 3.0 / std::sqrt(double(n)));
    CHECK(var == doctest::Approx(1.0).epsilon(0.005));
    CHECK(std::abs(skew) < 0.01);
    CHECK(kurt == doctest::Approx(3.0).epsilon(0.02));
    // P(|Z| > 2) = 0.045500, P(Z > 3) = 0.0013499
    CHECK(double(tail2) / n == doctest::Approx(0.045500).epsilon(0.03));
    CHECK(double(tail3) / n == doctest::Approx(0.0013499).epsilon(0.15));

    // agreement with the polar method on coarse histogram cells
    Rng rp(20240818);
    const int m = 1000000;
    int below_zig[8] = {0}, below_pol[8] = {0};
    const double cuts[8] = {-2.3, -1.5, -0.8, -0.2, 0.2, 0.8, 1.5, 2.3};
    Rng rz(20240819);
    for (int i = 0; i < m; ++i) {
        const double z = rz.normal();
        const double p = rp.normal_polar();
        for (int k = 0; k < 8; ++k) {
            if (z < cuts[k]) ++below_zig[k];
            if (p < cuts[k]) ++below_pol[k];
        }
    }
    for (int k = 0; k < 8; ++k) {
        const double pz = double(below_zig[k]) / m;
        const double pp = double(below_pol[k]) / m;
        const double se = std::sqrt(2.0 * pz * (1 - pz) / m) + 1e-9;
        CHECK(std::abs(pz - pp) < 4.0 * se);
    }
}

TEST_CASE("uniform and exponential basics") {
    Rng rng(5);
    double mn = 1.0, mx = 0.0, s = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        mn = std::min(mn, u);
        mx = std::max(mx, u);
        s += u;
    }
    CHECK(mn >= 0.0);
    CHECK(mx < 1.0);
    CHECK(s / n == doctest::Approx(0.5).epsilon(2e-3));

    double se = 0.0;
    for (int i = 0; i < n; ++i) se += rng.exponential(2.0);
    CHECK(se / n == doctest::Approx(0.5).epsilon(5e-3));
}
