#include "drlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

namespace drlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// logistic solution of p' = -p(1-p) on the lambda = 0 boundary
double degenerate_p(double p0, double s) {
    if (p0 == 0.0) return 0.0;
    return 1.0 / ((1.0 / p0 - 1.0) * std::exp(s) + 1.0);
}

// (1+u) log(1+u) - u without cancellation
double xlogx_minus(double u) {
    if (std::fabs(u) < 0.25) {
        double term = u * u, s = 0.0;
        for (int k = 2; k < 60; ++k) {
            const double c = term / (static_cast<double>(k) * (k - 1));
            s += (k % 2 == 0) ? c : -c;
            term *= u;
            if (std::fabs(c) < 1e-18 * std::fabs(s)) break;
        }
        return s;
    }
    return (1.0 + u) * std::log1p(u) - u;
}

}  // namespace

PhasePoint::PhasePoint(double p_, double lambda_) : p(p_), lambda(lambda_) {
    if (!(p >= 0.0 && p < 1.0)) throw DomainError("PhasePoint: p must lie in [0,1)");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("PhasePoint: lambda must be >= 0");
}

std::string to_string(Phase ph) {
    switch (ph) {
        case Phase::Pinned: return "Pinned";
        case Phase::Critical: return "Critical";
        case Phase::Unpinned: return "Unpinned";
        case Phase::DegenerateBoundary: return "DegenerateBoundary";
    }
    return "?";
}

double conserved_H(const PhasePoint& pt) {
    if (!(pt.lambda > 0.0)) throw DomainError("conserved_H: lambda must be > 0");
    return pt.p / pt.lambda + std::log(pt.lambda);
}

double critical_p(double lambda) {
    if (!(lambda > 0.0)) throw DomainError("critical_p: lambda must be > 0");
    return lambda - lambda * std::log(lambda);
}

Phase classify_phase(const PhasePoint& pt, double tol) {
    if (pt.lambda < 1.0) return Phase::Pinned;
    if (pt.lambda == 1.0) return (1.0 - pt.p < tol) ? Phase::DegenerateBoundary : Phase::Pinned;
    const double pc = critical_p(pt.lambda);
    if (pt.p < pc - tol) return Phase::Pinned;
    if (pt.p > pc + tol) return Phase::Unpinned;
    return Phase::Critical;
}

// ---------------------------------------------------------------- Trajectory

void Trajectory::check_range(double s) const {
    if (!(s >= 0.0 && s <= horizon)) {
        std::ostringstream os;
        os << "trajectory queried at s=" << s << " outside [0, " << horizon << "]";
        throw DomainError(os.str());
    }
}

double Trajectory::p_at(double s) const {
    check_range(s);
    if (degenerate()) return degenerate_p(start.p, s);
    return std::clamp(sol_.at(s, 2) * std::exp(sol_.at(s, 0)), 0.0, 1.0);
}

double Trajectory::q_at(double s) const {
    check_range(s);
    if (degenerate()) return 1.0 - degenerate_p(start.p, s);
    return std::exp(sol_.at(s, 1));
}

double Trajectory::log_lambda_at(double s) const {
    check_range(s);
    if (degenerate()) return -std::numeric_limits<double>::infinity();
    return sol_.at(s, 0);
}

double Trajectory::lambda_at(double s) const { return std::exp(log_lambda_at(s)); }

double Trajectory::rho_at(double s) const {
    check_range(s);
    if (degenerate()) return 0.0;
    return std::exp(sol_.at(s, 0) + sol_.at(s, 1));
}

ExpMixture Trajectory::law_at(double s) const { return {p_at(s), lambda_at(s)}; }

Trajectory integrate_dynamics(const PhasePoint& pt, double t_max, const DynamicsOptions& opt) {
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw DomainError("integrate_dynamics: t_max must be > 0");
    Trajectory tr;
    tr.start = pt;
    tr.horizon = t_max;
    tr.atol = opt.atol;
    tr.rtol = opt.rtol;

    if (pt.lambda == 0.0) {
        tr.H = kNaN;
        tr.method = "explicit logistic (lambda=0 boundary)";
        const auto n = static_cast<std::size_t>(std::ceil(t_max / 0.01)) + 1;
        for (std::size_t k = 0; k < n; ++k) {
            const double s = std::min(t_max, t_max * static_cast<double>(k) / static_cast<double>(n - 1));
            const double p = degenerate_p(pt.p, s);
            tr.t.push_back(s);
            tr.p.push_back(p);
            tr.one_minus_p.push_back(1.0 - p);
            tr.lambda.push_back(0.0);
            tr.rho.push_back(0.0);
        }
        return tr;
    }

    tr.H = conserved_H(pt);
    tr.method = "dopri5(4) on (log lambda, log(1-p), p/lambda), quintic Hermite dense output";
    OdeOptions o;
    o.atol = opt.atol;
    o.rtol = opt.rtol;
    o.h_max_rel = opt.h_max_rel;
    OdeRhs rhs = [](const OdeState& x, OdeState& dx, double) {
        flow_rhs_yz(x[0], x[1], dx[0], dx[1]);
        dx[2] = -dx[0];
    };
    o.rhs2 = [](const OdeState& x, const OdeState& dx, OdeState& d2, double) {
        const double q = std::exp(x[1]), lam = std::exp(x[0]);
        d2[0] = -q * dx[1];
        d2[1] = -(lam * dx[0] + q * dx[1]);
        d2[2] = -d2[0];
    };
    tr.sol_ = integrate_ode(rhs, {std::log(pt.lambda), std::log1p(-pt.p), pt.p / pt.lambda}, 0.0, t_max, o);
    const auto& s = tr.sol_;
    for (std::size_t k = 0; k < s.t.size(); ++k) {
        const double y = s.x[k][0];
        const double q = std::exp(s.x[k][1]);
        const double lam = std::exp(y);
        tr.t.push_back(s.t[k]);
        tr.one_minus_p.push_back(q);
        tr.p.push_back(std::clamp(s.x[k][2] * lam, 0.0, 1.0));
        tr.lambda.push_back(lam);
        tr.rho.push_back(q * lam);
    }
    return tr;
}

double equilibrium_lambda(double H) {
    if (!(H > 1.0)) throw DomainError("equilibrium_lambda: no root x > 1 unless H > 1 (critical or supercritical H)");
    auto f = [H](double x) { return H * x - x * std::log(x) - 1.0; };
    double lo = std::max(1.0, std::exp(H - 1.0));
    double hi = std::exp(H);
    // Newton from the right end with bisection safeguard; f is concave and
    // decreasing on [lo, hi].
    double x = hi;
    for (int it = 0; it < 200; ++it) {
        const double fx = f(x);
        if (std::fabs(fx) < 1e-13) return x;
        if (fx > 0.0) lo = x; else hi = x;
        const double d = H - std::log(x) - 1.0;
        double xn = (d != 0.0) ? x - fx / d : 0.5 * (lo + hi);
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        x = xn;
    }
    if (std::fabs(f(x)) < 1e-12) return x;
    throw NumericalError("equilibrium_lambda: root not reached");
}

// --------------------------------------------------------------- free energy

FreeEnergyResult free_energy_quadrature(const PhasePoint& pt) {
    FreeEnergyResult r;
    r.method = FreeEnergyResult::Method::quadrature;
    const Phase ph = classify_phase(pt);
    if (ph != Phase::Pinned || pt.lambda == 0.0) {
        r.value = 0.0;
        r.log_value = -std::numeric_limits<double>::infinity();
        return r;
    }
    const double lam = pt.lambda, p = pt.p, q = 1.0 - p;
    const double H = conserved_H(pt);
    // 1 - H written without cancellation near the critical curve
    const double delta = (critical_p(lam) - p) / lam;

    auto generic = [H](double y) { return (H - std::log(y)) / (1.0 - H * y + y * std::log(y)); };
    // y = 1 + u
    auto near_one = [delta](double u) {
        const double den = delta * (1.0 + u) + xlogx_minus(u);
        return (1.0 - delta - std::log1p(u)) / den;
    };
    // y = lam - v, with D(lam) = 1 - p
    auto near_lam = [=](double v) {
        const double den = q + (p / lam) * v + (lam - v) * std::log1p(-v / lam);
        return (H - std::log(lam - v)) / den;
    };

    boost::math::quadrature::tanh_sinh<double> ts(15);
    const double tol = 1e-14;
    double err_total = 0.0, l1 = 0.0;
    double integral = 0.0;
    std::size_t levels = 0;

    auto piece = [&](double a, double b, auto&& f2) {
        double err = 0.0, L1 = 0.0;
        const double v = ts.integrate(f2, a, b, tol, &err, &L1, &levels);
        integral += v;
        err_total += err * std::fabs(v);
        l1 += L1;
    };

    if (lam < 1.0) {
        piece(0.0, lam, [&](double y, double yc) {
            // yc > 0: distance to right end
            if (yc > 0.0 && y > 0.5 * lam) return near_lam(yc);
            return generic(y);
        });
    } else {
        piece(0.0, 1.0, [&](double y, double yc) {
            if (yc > 0.0 && y > 0.5) return near_one(-yc);
            return generic(y);
        });
        if (lam > 1.0) {
            piece(1.0, lam, [&](double y, double yc) {
                if (yc < 0.0 && y < 0.5 * (1.0 + lam)) return near_one(-yc);
                if (yc > 0.0) return near_lam(yc);
                return generic(y);
            });
        }
    }
    if (!std::isfinite(integral)) throw NumericalError("free_energy_quadrature: non-finite integral");
    const double rel_err = l1 > 0.0 ? err_total / std::max(std::fabs(integral), 1e-300) : 0.0;
    if (rel_err > 1e-8) {
        std::ostringstream os;
        os << "free_energy_quadrature: achieved relative tolerance " << rel_err;
        throw NumericalError(os.str());
    }
    r.log_value = -(std::log(lam) + integral);
    r.value = std::exp(r.log_value);
    // error in log F is the absolute error of the integral
    r.error_estimate = r.value * err_total;
    return r;
}

FreeEnergyResult free_energy_ode_limit(const PhasePoint& pt, double horizon) {
    FreeEnergyResult r;
    r.method = FreeEnergyResult::Method::ode_limit;
    if (pt.lambda == 0.0) {
        r.value = 0.0;
        r.log_value = -std::numeric_limits<double>::infinity();
        return r;
    }
    if (classify_phase(pt) != Phase::Pinned)
        throw DomainError("free_energy_ode_limit: requires a pinned point");
    const Trajectory tr = integrate_dynamics(pt, horizon);
    auto logF = [&](double T) { return -T + tr.dense().at(T, 1) - tr.log_lambda_at(T); };
    const double T2 = std::max(0.5 * horizon, horizon - 10.0);
    const double l1 = logF(horizon), l2 = logF(T2);
    r.log_value = l1;
    r.value = std::exp(l1);
    r.error_estimate = r.value * std::fabs(std::expm1(l1 - l2));
    const double lam_ratio = std::exp(tr.log_lambda_at(horizon) - std::log(pt.lambda));
    if (!(lam_ratio < 1e-6) || r.error_estimate > 1e-7 * r.value) {
        std::ostringstream os;
        os << "free_energy_ode_limit: not converged at T=" << horizon << " (lambda(T)/lambda(0)=" << lam_ratio
           << ", plateau F(T)=" << r.value << ", F(" << T2 << ")=" << std::exp(l2) << ")";
        throw NumericalError(os.str());
    }
    return r;
}

double log_asymptote_prediction(double lambda, double p) {
    if (!(lambda > 0.0 && lambda < std::numbers::e))
        throw DomainError("asymptote_prediction: lambda must lie in (0,e)");
    const double pi = std::numbers::pi;
    if (lambda > 1.0) {
        const double gap = critical_p(lambda) - p;
        if (!(gap > 0.0)) throw DomainError("asymptote_prediction: p must be below p_c");
        return -pi * std::sqrt(2.0 * lambda) / std::sqrt(gap);
    }
    const double g = 1.0 - p;
    if (!(g > 0.0)) throw DomainError("asymptote_prediction: p must be below 1");
    if (lambda == 1.0) return (2.0 / 3.0) * std::log(g) - (pi / std::sqrt(2.0)) / std::sqrt(g);
    return std::log(g) / (1.0 - lambda);
}

double asymptote_prediction(double lambda, double p) { return std::exp(log_asymptote_prediction(lambda, p)); }

// ------------------------------------------------------------ verification

double verify_fixed_point(const PhasePoint& pt, double t, int x_checkpoints) {
    if (!(t >= 0.0)) throw DomainError("verify_fixed_point: t must be >= 0");
    if (t == 0.0) return 0.0;
    const Trajectory tr = integrate_dynamics(pt, t);
    using GL = boost::math::quadrature::gauss<double, 64>;

    if (tr.degenerate()) {
        const double rhs = GL::integrate([&](double s) {
            const double pv = tr.p_at(t - s);
            return std::exp(-s) * pv * pv;
        }, 0.0, t) + std::exp(-t) * pt.p;
        return std::fabs(tr.p_at(t) - rhs);
    }

    const ExpMixture mu_t = tr.law_at(t);
    const ExpMixture mu_0 = pt.law();
    const double xmax = 6.0 / mu_t.lambda;
    double resid = 0.0;
    for (int k = 0; k < x_checkpoints; ++k) {
        const double x = xmax * k / std::max(1, x_checkpoints - 1);
        const double lhs = cdf(mu_t, x);
        const double integral = GL::integrate([&](double s) {
            const AtomGammaMixture g = convolve_self(tr.law_at(t - s));
            return std::exp(-s) * shift_cdf(g, s, x);
        }, 0.0, t);
        const double rhs = integral + std::exp(-t) * cdf(mu_0, x + t);
        resid = std::max(resid, std::fabs(lhs - rhs));
    }
    return resid;
}

double verify_pde_weak(const PhasePoint& pt, double theta, double t, const DynamicsOptions& opt) {
    if (!(theta > 0.0)) throw DomainError("verify_pde_weak: theta must be > 0");
    const Trajectory tr = integrate_dynamics(pt, t, opt);
    // with f = e^{-theta x}: int f dmu = 1 - q theta/(lambda+theta),
    // int f' 1{x>0} dmu = -theta q lambda/(lambda+theta), int int f(x+y) = L^2
    auto L = [&](double s) {
        const double q = tr.q_at(s), lam = tr.degenerate() ? 0.0 : tr.lambda_at(s);
        return 1.0 - q * theta / (lam + theta);
    };
    auto integrand = [&](double s) {
        const double q = tr.q_at(s), lam = tr.degenerate() ? 0.0 : tr.lambda_at(s);
        const double l = 1.0 - q * theta / (lam + theta);
        return theta * q * lam / (lam + theta) - l + l * l;
    };
    using GL = boost::math::quadrature::gauss<double, 7>;
    double rhs = 0.0;
    for (std::size_t k = 0; k + 1 < tr.t.size(); ++k) {
        if (tr.t[k + 1] > tr.t[k]) rhs += GL::integrate(integrand, tr.t[k], tr.t[k + 1]);
    }
    return std::fabs(L(t) - L(0.0) - rhs);
}

}  // namespace drlab
