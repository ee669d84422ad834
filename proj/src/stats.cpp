#include "drlab/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>

#include "drlab/errors.hpp"

namespace drlab {

double ks_one_sample(std::span<const double> sorted, const std::function<double(double)>& cdf,
                     const std::function<double(double)>& cdf_left) {
    const std::size_t n = sorted.size();
    if (n == 0) throw DomainError("ks_one_sample: empty sample");
    const double dn = static_cast<double>(n);
    double d = 0.0;
    std::size_t i = 0;
    while (i < n) {
        const double v = sorted[i];
        std::size_t j = i;
        while (j < n && sorted[j] == v) ++j;
        const double below = static_cast<double>(i) / dn;  // F_n(v-)
        const double upto = static_cast<double>(j) / dn;   // F_n(v)
        d = std::max(d, std::fabs(upto - cdf(v)));
        d = std::max(d, std::fabs(below - cdf_left(v)));
        i = j;
    }
    return d;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

namespace {
double kolmogorov_c(double alpha) {
    // invert the asymptotic survival function by bisection
    double lo = 0.2, hi = 4.0;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (kolmogorov_sf(mid) > alpha) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}
}  // namespace

double kolmogorov_sf(double x) {
    if (x <= 0.0) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        s += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-18) break;
    }
    return std::clamp(s, 0.0, 1.0);
}

double ks_critical_one(double alpha, std::size_t n) {
    return kolmogorov_c(alpha) / std::sqrt(static_cast<double>(n));
}

double ks_critical_two(double alpha, std::size_t n, std::size_t m) {
    const double dn = static_cast<double>(n), dm = static_cast<double>(m);
    return kolmogorov_c(alpha) * std::sqrt((dn + dm) / (dn * dm));
}

MeanSd mean_sd(std::span<const double> xs) {
    MeanSd r;
    if (xs.empty()) return r;
    double m = 0.0, s2 = 0.0;
    std::size_t k = 0;
    for (double x : xs) {
        ++k;
        const double d = x - m;
        m += d / static_cast<double>(k);
        s2 += d * (x - m);
    }
    r.mean = m;
    r.sd = xs.size() > 1 ? std::sqrt(s2 / static_cast<double>(xs.size() - 1)) : 0.0;
    r.se = r.sd / std::sqrt(static_cast<double>(xs.size()));
    return r;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("linear_fit: need >= 2 paired points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

double normal_quantile(double u) {
    return boost::math::quantile(boost::math::normal_distribution<double>(), u);
}

int binomial_upper(int n, double pr, double tail) {
    boost::math::binomial_distribution<double> b(n, pr);
    for (int k = 0; k <= n; ++k)
        if (boost::math::cdf(boost::math::complement(b, k)) <= tail) return k;
    return n;
}

}  // namespace drlab
