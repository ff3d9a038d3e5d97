#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "superflow/grid.hpp"

namespace superflow {

// One-dimensional spatial domain with a nested truncation schedule.
// A bounded domain's schedule shrinks its margins geometrically and ends at
// the closed domain itself (the Dirichlet problem on the full interval is the
// limit object the schedule certifies). An unbounded domain uses growing
// bounded windows.
struct Domain1D {
    double left = 0.0;
    double right = 1.0;
    std::vector<Interval> truncations;

    bool bounded() const { return std::isfinite(left) && std::isfinite(right); }

    const Interval& final_truncation() const {
        if (truncations.empty()) throw DomainError("domain has no truncations");
        return truncations.back();
    }

    static Domain1D bounded_domain(double l, double r, int levels = 4,
                                   double first_margin_fraction = 0.04) {
        if (!(l < r)) throw DomainError("domain endpoints out of order");
        Domain1D d;
        d.left = l;
        d.right = r;
        const double w = r - l;
        double m = first_margin_fraction * w;
        for (int k = 0; k < levels - 1; ++k) {
            d.truncations.push_back({l + m, r - m});
            m *= 0.5;
        }
        d.truncations.push_back({l, r});
        d.validate();
        return d;
    }

    static Domain1D whole_line(double base_halfwidth = 4.0, int levels = 3) {
        Domain1D d;
        d.left = -std::numeric_limits<double>::infinity();
        d.right = std::numeric_limits<double>::infinity();
        double h = base_halfwidth;
        for (int k = 0; k < levels; ++k) {
            d.truncations.push_back({-h, h});
            h *= 2.0;
        }
        d.validate();
        return d;
    }

    static Domain1D half_line(double base_width = 4.0, int levels = 3, double origin = 0.0) {
        Domain1D d;
        d.left = origin;
        d.right = std::numeric_limits<double>::infinity();
        double w = base_width;
        double m = 0.05 * base_width;
        for (int k = 0; k < levels; ++k) {
            d.truncations.push_back({origin + m, origin + w});
            w *= 2.0;
            m *= 0.5;
        }
        d.validate();
        return d;
    }

    void validate() const {
        if (!(left < right)) throw DomainError("domain endpoints out of order");
        if (truncations.empty()) throw DomainError("empty truncation schedule");
        for (std::size_t k = 0; k < truncations.size(); ++k) {
            const auto& A = truncations[k];
            if (!(A.lo < A.hi)) throw DomainError("degenerate truncation interval");
            if (A.lo < left || A.hi > right) throw DomainError("truncation leaves the domain");
            if (k > 0 && !truncations[k - 1].strictly_inside(truncations[k]))
                throw DomainError("truncations are not strictly nested");
        }
    }
};

}  // namespace superflow
