#include "drlab/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "drlab/errors.hpp"

namespace drlab {

namespace odeint = boost::numeric::odeint;

std::size_t DenseSolution::interval(double s) const {
    if (t.size() < 2) return 0;
    auto it = std::upper_bound(t.begin(), t.end(), s);
    std::size_t k = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
    return std::min(k, t.size() - 2);
}

double DenseSolution::at(double s, std::size_t c) const {
    if (s < t.front() || s > t.back()) {
        std::ostringstream os;
        os << "DenseSolution: t=" << s << " outside [" << t.front() << ", " << t.back() << "]";
        throw DomainError(os.str());
    }
    if (t.size() == 1) return x[0][c];
    const std::size_t k = interval(s);
    const double h = t[k + 1] - t[k];
    if (h <= 0.0) return x[k][c];
    const double u = (s - t[k]) / h;
    const double u2 = u * u, u3 = u2 * u;
    if (!ddx.empty()) {
        const double u4 = u3 * u, u5 = u4 * u;
        const double a0 = 1 - 10 * u3 + 15 * u4 - 6 * u5;
        const double a1 = u - 6 * u3 + 8 * u4 - 3 * u5;
        const double a2 = 0.5 * (u2 - 3 * u3 + 3 * u4 - u5);
        const double b0 = 10 * u3 - 15 * u4 + 6 * u5;
        const double b1 = -4 * u3 + 7 * u4 - 3 * u5;
        const double b2 = 0.5 * (u3 - 2 * u4 + u5);
        return a0 * x[k][c] + h * a1 * dx[k][c] + h * h * a2 * ddx[k][c] + b0 * x[k + 1][c] +
               h * b1 * dx[k + 1][c] + h * h * b2 * ddx[k + 1][c];
    }
    const double h00 = 2 * u3 - 3 * u2 + 1;
    const double h10 = u3 - 2 * u2 + u;
    const double h01 = -2 * u3 + 3 * u2;
    const double h11 = u3 - u2;
    return h00 * x[k][c] + h10 * h * dx[k][c] + h01 * x[k + 1][c] + h11 * h * dx[k + 1][c];
}

OdeState DenseSolution::at(double s) const {
    OdeState out(x.front().size());
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = at(s, c);
    return out;
}

DenseSolution integrate_ode(const OdeRhs& rhs, OdeState x0, double t0, double t1,
                            const OdeOptions& opt) {
    using stepper_t = odeint::runge_kutta_dopri5<OdeState>;
    auto controlled = odeint::make_controlled(opt.atol, opt.rtol, stepper_t());
    auto sys = [&rhs](const OdeState& x, OdeState& dxdt, double t) { rhs(x, dxdt, t); };

    DenseSolution sol;
    OdeState d(x0.size()), dd(x0.size());
    auto record = [&](double tt, const OdeState& xx) {
        rhs(xx, d, tt);
        sol.t.push_back(tt);
        sol.x.push_back(xx);
        sol.dx.push_back(d);
        if (opt.rhs2) {
            opt.rhs2(xx, d, dd, tt);
            sol.ddx.push_back(dd);
        }
    };
    record(t0, x0);
    if (t1 <= t0) return sol;

    double t = t0;
    double dt = std::min(opt.h0, t1 - t0);
    OdeState x = std::move(x0);
    std::size_t steps = 0;
    while (t < t1) {
        if (++steps > opt.max_steps) {
            std::ostringstream os;
            os << "integrate_ode: step budget exhausted at t=" << t;
            throw NumericalError(os.str());
        }
        const double cap = std::min(opt.h_max, opt.h_max_rel * std::max(1.0, std::fabs(t)));
        dt = std::min({dt, cap, t1 - t});
        auto res = controlled.try_step(sys, x, t, dt);
        if (res == odeint::fail) {
            ++sol.rejected_steps;
            if (dt < opt.h_min * std::max(1.0, std::fabs(t))) {
                std::ostringstream os;
                os << "integrate_ode: step size collapsed to " << dt << " at t=" << t
                   << " (atol=" << opt.atol << ", rtol=" << opt.rtol << ")";
                throw NumericalError(os.str());
            }
            continue;
        }
        for (double v : x)
            if (!std::isfinite(v)) {
                std::ostringstream os;
                os << "integrate_ode: non-finite state at t=" << t;
                throw NumericalError(os.str());
            }
        // land exactly on t1 when the remaining gap is at rounding level
        if (t1 - t < 1e-13 * std::max(1.0, std::fabs(t1))) t = t1;
        record(t, x);
        if (opt.stop && opt.stop(t, x)) break;
    }
    return sol;
}

}  // namespace drlab
