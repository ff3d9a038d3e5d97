#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <utility>

#include "superflow/errors.hpp"
#include "superflow/expr.hpp"

namespace superflow {

// Scalar coefficient of an elliptic operator or branching mechanism,
// a function of position and (optionally) time. Derivative queries use
// analytic forms when available and centered finite differences otherwise.
class Coefficient {
public:
    using Fn = std::function<double(double, double)>;

    Coefficient() : f_([](double, double) { return 0.0; }) {
        dx_ = [](double, double) { return 0.0; };
        dt_ = [](double, double) { return 0.0; };
    }

    static Coefficient constant(double c) {
        Coefficient k;
        k.f_ = [c](double, double) { return c; };
        return k;
    }

    static Coefficient of_x(std::function<double(double)> f) {
        Coefficient k;
        k.f_ = [fn = std::move(f)](double x, double) { return fn(x); };
        k.dx_ = nullptr;
        k.dt_ = [](double, double) { return 0.0; };
        k.time_dependent_ = false;
        return k;
    }

    static Coefficient of_x(std::function<double(double)> f, std::function<double(double)> dfdx) {
        Coefficient k;
        k.f_ = [fn = std::move(f)](double x, double) { return fn(x); };
        k.dx_ = [g = std::move(dfdx)](double x, double) { return g(x); };
        k.dt_ = [](double, double) { return 0.0; };
        k.time_dependent_ = false;
        return k;
    }

    static Coefficient space_time(Fn f, bool time_dependent = true) {
        Coefficient k;
        k.f_ = std::move(f);
        k.dx_ = nullptr;
        k.dt_ = nullptr;
        k.time_dependent_ = time_dependent;
        return k;
    }

    static Coefficient space_time(Fn f, Fn dfdx, Fn dfdt, bool time_dependent = true) {
        Coefficient k;
        k.f_ = std::move(f);
        k.dx_ = std::move(dfdx);
        k.dt_ = std::move(dfdt);
        k.time_dependent_ = time_dependent;
        return k;
    }

    static Coefficient from_expression(const expr::Expression& e) {
        Coefficient k;
        auto ex = e;
        auto dx = e.deriv_x();
        auto dt = e.deriv_t();
        k.f_ = [ex](double x, double t) { return ex(x, t); };
        k.dx_ = [dx](double x, double t) { return dx(x, t); };
        k.dt_ = [dt](double x, double t) { return dt(x, t); };
        k.time_dependent_ = e.time_dependent();
        return k;
    }

    static Coefficient from_expression(const std::string& text) {
        return from_expression(expr::Expression(text));
    }

    double operator()(double x, double t = 0.0) const { return f_(x, t); }

    bool time_dependent() const { return time_dependent_; }
    bool has_analytic_derivatives() const { return static_cast<bool>(dx_); }

    double fd_step() const { return fd_step_; }
    void set_fd_step(double h) { fd_step_ = h; }

    double deriv_x(double x, double t = 0.0) const { return deriv_x(x, t, fd_step_); }
    double deriv_x(double x, double t, double step) const {
        if (dx_) return dx_(x, t);
        return (f_(x + step, t) - f_(x - step, t)) / (2.0 * step);
    }

    double deriv_t(double x, double t) const { return deriv_t(x, t, fd_step_); }
    double deriv_t(double x, double t, double step) const {
        if (dt_) return dt_(x, t);
        if (!time_dependent_) return 0.0;
        return (f_(x, t + step) - f_(x, t - step)) / (2.0 * step);
    }

private:
    Fn f_;
    Fn dx_, dt_;
    bool time_dependent_ = false;
    double fd_step_ = 1e-5;
};

}  // namespace superflow
