#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "superflow/errors.hpp"

namespace superflow {

// Tridiagonal matrix; lower[0] and upper[n-1] are unused.
struct Tridiagonal {
    std::vector<double> lower, diag, upper;

    std::size_t size() const { return diag.size(); }

    static Tridiagonal zeros(std::size_t n) {
        Tridiagonal m;
        m.lower.assign(n, 0.0);
        m.diag.assign(n, 0.0);
        m.upper.assign(n, 0.0);
        return m;
    }

    Tridiagonal transposed() const {
        Tridiagonal m = zeros(size());
        m.diag = diag;
        for (std::size_t i = 0; i + 1 < size(); ++i) {
            m.upper[i] = lower[i + 1];
            m.lower[i + 1] = upper[i];
        }
        return m;
    }

    void apply(const std::vector<double>& x, std::vector<double>& y) const {
        const std::size_t n = size();
        y.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = diag[i] * x[i];
            if (i > 0) s += lower[i] * x[i - 1];
            if (i + 1 < n) s += upper[i] * x[i + 1];
            y[i] = s;
        }
    }

    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> y;
        apply(x, y);
        return y;
    }
};

// Thomas algorithm for (a*I + s*M) x = rhs. Stable without pivoting for the
// matrices used here (shifted discretizations similar to definite symmetric
// tridiagonal matrices).
inline std::vector<double> solve_shifted(const Tridiagonal& M, double a, double s,
                                         const std::vector<double>& rhs) {
    const std::size_t n = M.size();
    if (rhs.size() != n) throw SolverError("solve_shifted: size mismatch");
    std::vector<double> c(n), d(n), x(n);
    double denom = a + s * M.diag[0];
    if (denom == 0.0) throw SolverError("solve_shifted: zero pivot");
    c[0] = s * M.upper[0] / denom;
    d[0] = rhs[0] / denom;
    for (std::size_t i = 1; i < n; ++i) {
        const double li = s * M.lower[i];
        denom = (a + s * M.diag[i]) - li * c[i - 1];
        if (denom == 0.0) throw SolverError("solve_shifted: zero pivot");
        if (i + 1 < n) c[i] = s * M.upper[i] / denom;
        d[i] = (rhs[i] - li * d[i - 1]) / denom;
    }
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

}  // namespace superflow
