#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace drlab {

using OdeState = std::vector<double>;
using OdeRhs = std::function<void(const OdeState& x, OdeState& dxdt, double t)>;
/// Optional analytic second derivative x'' given (x, x', t); enables quintic
/// Hermite dense output.
using OdeRhs2 = std::function<void(const OdeState& x, const OdeState& dxdt, OdeState& d2x, double t)>;

struct OdeOptions {
    double atol = 1e-12;
    double rtol = 1e-10;
    double h0 = 1e-3;
    /// Step cap; `h_max_rel` additionally caps the step at h_max_rel * max(1, t).
    double h_max = std::numeric_limits<double>::infinity();
    double h_max_rel = std::numeric_limits<double>::infinity();
    double h_min = 1e-14;
    std::size_t max_steps = 5'000'000;
    /// Optional early stop, checked after each accepted step.
    std::function<bool(double t, const OdeState& x)> stop;
    OdeRhs2 rhs2;
};

/// Accepted RK nodes with derivatives; cubic Hermite in between, or quintic
/// Hermite when second derivatives were recorded.
class DenseSolution {
public:
    std::vector<double> t;
    std::vector<OdeState> x;
    std::vector<OdeState> dx;
    std::vector<OdeState> ddx;  // empty unless OdeOptions::rhs2 was given
    std::size_t rejected_steps = 0;

    double t_begin() const { return t.front(); }
    double t_end() const { return t.back(); }
    OdeState at(double s) const;
    double at(double s, std::size_t component) const;
    /// Index k with t[k] <= s <= t[k+1].
    std::size_t interval(double s) const;
};

/// Adaptive Dormand-Prince 5(4) from t0 to t1 (Boost.Odeint stepper with
/// the standard controller). Throws NumericalError when the step size
/// collapses below h_min or the step count is exhausted.
DenseSolution integrate_ode(const OdeRhs& rhs, OdeState x0, double t0, double t1,
                            const OdeOptions& opt = {});

}  // namespace drlab
