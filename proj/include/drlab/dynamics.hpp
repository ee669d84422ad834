#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "drlab/errors.hpp"
#include "drlab/measures.hpp"
#include "drlab/ode.hpp"

namespace drlab {

/// Initial law parameters of the mixture family; p < 1 always.
struct PhasePoint {
    double p = 0.0;
    double lambda = 1.0;

    PhasePoint() = default;
    PhasePoint(double p_, double lambda_);
    ExpMixture law() const { return {p, lambda}; }
};

enum class Phase { Pinned, Critical, Unpinned, DegenerateBoundary };

std::string to_string(Phase ph);

struct DynamicsOptions {
    double atol = tol::ode_abs;
    double rtol = tol::ode_rel;
    /// Step cap relative to max(1,t).
    double h_max_rel = 0.05;
};

/// Exact (p, lambda) flow sampled on the accepted RK grid.
///
/// Internally the flow is integrated in (y, z, w) = (log lambda, log(1-p),
/// p/lambda):
///   y' = -e^z,  z' = -(e^y - 1 + e^z),  w' = e^z.
/// H = w + y is a linear first integral, which any Runge-Kutta method
/// preserves up to rounding; z keeps 1-p and rho = e^{y+z} at full relative
/// precision as p -> 1. Dense output is quintic Hermite using analytic
/// second derivatives. p is reported as w*lambda (so H recomputed from
/// (p, lambda) is exact to rounding) and 1-p as e^z; the two agree to the
/// integration tolerance. The lambda = 0 boundary uses the explicit logistic
/// solution instead.
class Trajectory {
public:
    PhasePoint start;
    double H = 0.0;  // NaN on the lambda = 0 branch
    double horizon = 0.0;
    std::vector<double> t, p, lambda, rho, one_minus_p;
    std::string method;
    double atol = 0.0, rtol = 0.0;

    bool degenerate() const { return start.lambda == 0.0; }
    double p_at(double s) const;
    double q_at(double s) const;  // 1 - p(s)
    double lambda_at(double s) const;
    double log_lambda_at(double s) const;
    double rho_at(double s) const;
    ExpMixture law_at(double s) const;
    const DenseSolution& dense() const { return sol_; }

    friend Trajectory integrate_dynamics(const PhasePoint&, double, const DynamicsOptions&);

private:
    void check_range(double s) const;
    DenseSolution sol_;
};

double conserved_H(const PhasePoint& pt);
double critical_p(double lambda);
Phase classify_phase(const PhasePoint& pt, double tol = tol::phase);

Trajectory integrate_dynamics(const PhasePoint& pt, double t_max, const DynamicsOptions& opt = {});

/// Flow right-hand side in (y, z) = (log lambda, log(1-p)), shared with the
/// red-tree ODEs that integrate Theta or a jointly with the dynamics.
inline void flow_rhs_yz(double y, double z, double& dy, double& dz) {
    const double q = std::exp(z);
    dy = -q;
    dz = -(std::exp(y) - 1.0 + q);
}

double equilibrium_lambda(double H);

struct FreeEnergyResult {
    enum class Method { quadrature, ode_limit };
    double value = 0.0;
    double log_value = 0.0;  // -inf when value == 0
    Method method = Method::quadrature;
    double error_estimate = 0.0;
};

FreeEnergyResult free_energy_quadrature(const PhasePoint& pt);
FreeEnergyResult free_energy_ode_limit(const PhasePoint& pt, double horizon);

/// Thm-1.3 shape without the unknown constant; log form avoids underflow.
double asymptote_prediction(double lambda, double p);
double log_asymptote_prediction(double lambda, double p);

double verify_fixed_point(const PhasePoint& pt, double t, int x_checkpoints = 20);
double verify_pde_weak(const PhasePoint& pt, double theta, double t,
                       const DynamicsOptions& opt = {});

}  // namespace drlab
