#include "superflow/grid.hpp"

#include <algorithm>
#include <cmath>

namespace superflow {

GridFunction::GridFunction(Interval domain, std::vector<double> values, BoundaryTag boundary)
    : domain_(domain), values_(std::move(values)), boundary_(boundary) {
    if (values_.size() < 3) throw DomainError("grid function needs at least 3 nodes");
    if (!(domain_.lo < domain_.hi)) throw DomainError("grid interval is empty");
    spacing_ = domain_.width() / double(values_.size() - 1);
    for (double v : values_)
        if (!std::isfinite(v)) throw DomainError("grid function has non-finite values");
}

GridFunction GridFunction::zeros(Interval domain, std::size_t n, BoundaryTag boundary) {
    return GridFunction(domain, std::vector<double>(n, 0.0), boundary);
}

GridFunction GridFunction::constant(Interval domain, std::size_t n, double c, BoundaryTag boundary) {
    return GridFunction(domain, std::vector<double>(n, c), boundary);
}

GridFunction GridFunction::sample(Interval domain, std::size_t n,
                                  const std::function<double(double)>& f, BoundaryTag boundary) {
    std::vector<double> v(n);
    const double h = domain.width() / double(n - 1);
    for (std::size_t i = 0; i < n; ++i) v[i] = f(domain.lo + double(i) * h);
    return GridFunction(domain, std::move(v), boundary);
}

GridFunction GridFunction::smoothed_indicator(Interval domain, std::size_t n, Interval support,
                                              double ramp_fraction) {
    const double ramp = ramp_fraction * support.width() / 2.0;
    auto f = [&](double x) {
        if (x <= support.lo || x >= support.hi) return 0.0;
        double d = std::min(x - support.lo, support.hi - x);
        if (d >= ramp) return 1.0;
        double s = d / ramp;
        return s * s * (3.0 - 2.0 * s);  // cubic smoothstep
    };
    return sample(domain, n, f, BoundaryTag::DirichletZero);
}

double GridFunction::interpolate(double x) const {
    if (x <= domain_.lo || x >= domain_.hi) {
        if (boundary_ == BoundaryTag::DirichletZero)
            return (x == domain_.lo) ? values_.front() : (x == domain_.hi ? values_.back() : 0.0);
        return x <= domain_.lo ? values_.front() : values_.back();
    }
    const double s = (x - domain_.lo) / spacing_;
    std::size_t i = std::min(static_cast<std::size_t>(s), values_.size() - 2);
    const double w = s - double(i);
    return values_[i] * (1.0 - w) + values_[i + 1] * w;
}

double GridFunction::max() const { return *std::max_element(values_.begin(), values_.end()); }
double GridFunction::min() const { return *std::min_element(values_.begin(), values_.end()); }

double GridFunction::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double GridFunction::max_abs_interior() const {
    double m = 0.0;
    for (std::size_t i = 1; i + 1 < values_.size(); ++i) m = std::max(m, std::abs(values_[i]));
    return m;
}

double GridFunction::min_interior() const {
    double m = values_[1];
    for (std::size_t i = 1; i + 1 < values_.size(); ++i) m = std::min(m, values_[i]);
    return m;
}

double GridFunction::integrate() const {
    double s = 0.5 * (values_.front() + values_.back());
    for (std::size_t i = 1; i + 1 < values_.size(); ++i) s += values_[i];
    return s * spacing_;
}

GridFunction& GridFunction::scale(double c) {
    for (double& v : values_) v *= c;
    return *this;
}

GridFunction& GridFunction::apply_dirichlet() {
    values_.front() = 0.0;
    values_.back() = 0.0;
    return *this;
}

double inner_product(const GridFunction& f, const GridFunction& g) {
    if (f.size() != g.size()) throw DomainError("inner_product: grid size mismatch");
    double s = 0.5 * (f[0] * g[0] + f[f.size() - 1] * g[g.size() - 1]);
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i] * g[i];
    return s * f.spacing();
}

GridFunction pointwise_product(const GridFunction& f, const GridFunction& g) {
    if (f.size() != g.size()) throw DomainError("pointwise_product: grid size mismatch");
    std::vector<double> v(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) v[i] = f[i] * g[i];
    return GridFunction(f.domain(), std::move(v), f.boundary());
}

Measure Measure::point(double x, double mass) {
    Measure m;
    m.atoms.emplace_back(x, mass);
    return m;
}

Measure Measure::density(GridFunction g) {
    Measure m;
    m.densities.push_back(std::move(g));
    return m;
}

double Measure::total_mass() const {
    double s = 0.0;
    for (const auto& [x, w] : atoms) s += w;
    for (const auto& d : densities) s += d.integrate();
    return s;
}

double Measure::integrate(const GridFunction& f) const {
    double s = 0.0;
    for (const auto& [x, w] : atoms) s += w * f.interpolate(x);
    for (const auto& d : densities) s += inner_product(d, f);
    return s;
}

double Measure::integrate(const std::function<double(double)>& f) const {
    double s = 0.0;
    for (const auto& [x, w] : atoms) s += w * f(x);
    for (const auto& d : densities) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            double wgt = (i == 0 || i + 1 == d.size()) ? 0.5 : 1.0;
            acc += wgt * d[i] * f(d.node(i));
        }
        s += acc * d.spacing();
    }
    return s;
}

}  // namespace superflow
