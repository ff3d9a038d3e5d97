#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "superflow/errors.hpp"

namespace superflow {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double width() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
    bool strictly_contains(double x) const { return x > lo && x < hi; }
    bool strictly_inside(const Interval& outer) const {
        return lo > outer.lo && hi < outer.hi;
    }
    bool inside(const Interval& outer) const { return lo >= outer.lo && hi <= outer.hi; }
};

enum class BoundaryTag { DirichletZero, None };

// Real-valued function sampled on a uniform grid over a truncation interval.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(Interval domain, std::vector<double> values,
                 BoundaryTag boundary = BoundaryTag::DirichletZero);

    static GridFunction zeros(Interval domain, std::size_t n,
                              BoundaryTag boundary = BoundaryTag::DirichletZero);
    static GridFunction constant(Interval domain, std::size_t n, double c,
                                 BoundaryTag boundary = BoundaryTag::None);
    static GridFunction sample(Interval domain, std::size_t n,
                               const std::function<double(double)>& f,
                               BoundaryTag boundary = BoundaryTag::DirichletZero);
    // 1 on [lo+ramp, hi-ramp], smooth cubic ramp down to 0 at lo and hi, 0 outside
    static GridFunction smoothed_indicator(Interval domain, std::size_t n, Interval support,
                                           double ramp_fraction = 0.25);

    std::size_t size() const { return values_.size(); }
    double spacing() const { return spacing_; }
    const Interval& domain() const { return domain_; }
    BoundaryTag boundary() const { return boundary_; }
    double node(std::size_t i) const { return domain_.lo + double(i) * spacing_; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    // piecewise linear; outside the domain: 0 for DirichletZero, clamped otherwise
    double interpolate(double x) const;

    double max() const;
    double min() const;
    double max_abs() const;
    double max_abs_interior() const;
    double min_interior() const;

    // trapezoid rule over the domain
    double integrate() const;

    GridFunction& scale(double c);
    GridFunction& apply_dirichlet();  // zero the end values

private:
    Interval domain_;
    std::vector<double> values_;
    BoundaryTag boundary_ = BoundaryTag::DirichletZero;
    double spacing_ = 0.0;
};

// trapezoid rule of f*g over the shared grid (grids must match)
double inner_product(const GridFunction& f, const GridFunction& g);
GridFunction pointwise_product(const GridFunction& f, const GridFunction& g);

// A finite nonnegative measure: point atoms, a density on a grid, or both.
struct Measure {
    std::vector<std::pair<double, double>> atoms;  // (position, mass)
    std::vector<GridFunction> densities;

    static Measure point(double x, double mass = 1.0);
    static Measure density(GridFunction g);

    double total_mass() const;
    // <mu, f>: exact sum over atoms (f interpolated) + trapezoid against densities
    double integrate(const GridFunction& f) const;
    double integrate(const std::function<double(double)>& f) const;
};

}  // namespace superflow
