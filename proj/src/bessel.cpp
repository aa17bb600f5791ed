#include "besi/bessel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "besi/error.hpp"

namespace besi {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 10000;
constexpr double kRescale = 1e250;

// (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu) and the mean of the two
// reciprocals. Small |mu| uses the odd zeta series to avoid cancellation.
void temme_gammas(double mu, double& gam1, double& gam2, double& gampl, double& gammi) {
    gampl = 1.0 / std::tgamma(1.0 + mu);
    gammi = 1.0 / std::tgamma(1.0 - mu);
    gam2 = 0.5 * (gammi + gampl);
    if (std::abs(mu) >= 1e-2) {
        gam1 = (gammi - gampl) / (2.0 * mu);
        return;
    }
    constexpr double euler = 0.57721566490153286;
    constexpr double z3 = 1.2020569031595943, z5 = 1.0369277551433699;
    constexpr double z7 = 1.0083492773819228, z9 = 1.0020083928260822;
    const double m2 = mu * mu;
    const double g = euler + m2 * (z3 / 3.0 + m2 * (z5 / 5.0 + m2 * (z7 / 7.0 + m2 * z9 / 9.0)));
    const double half_log = -0.5 * (std::lgamma(1.0 + mu) + std::lgamma(1.0 - mu));
    const double t = mu * g;
    const double sinhc = std::abs(t) < 1e-8 ? 1.0 + t * t / 6.0 : std::sinh(t) / t;
    gam1 = -std::exp(half_log) * g * sinhc;
}

struct ScaledPair {
    double k0;          // e^x K_nu(x) / e^log_scale
    double k1;          // e^x K_{nu+1}(x) / e^log_scale
    double log_scale;
};

// e^x K_mu and e^x K_{mu+1} for |mu| <= 1/2.
void base_pair(double mu, double x, double& kmu, double& k1) {
    const double mu2 = mu * mu;
    if (x <= 2.0) {
        const double x2 = 0.5 * x;
        const double pimu = std::numbers::pi * mu;
        const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
        double d = -std::log(x2);
        double e = mu * d;
        const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
        double gam1, gam2, gampl, gammi;
        temme_gammas(mu, gam1, gam2, gampl, gammi);
        double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
        double sum = ff;
        e = std::exp(e);
        double p = 0.5 * e / gampl;
        double q = 0.5 / (e * gammi);
        double c = 1.0;
        d = x2 * x2;
        double sum1 = p;
        int i = 1;
        for (; i <= kMaxIter; ++i) {
            const double di = static_cast<double>(i);
            ff = (di * ff + p + q) / (di * di - mu2);
            c *= d / di;
            p /= di - mu;
            q /= di + mu;
            const double del = c * ff;
            sum += del;
            sum1 += c * (p - di * ff);
            if (std::abs(del) < std::abs(sum) * kEps) break;
        }
        if (i > kMaxIter) throw NumericalError("bessel K: series did not converge");
        const double ex = std::exp(x);
        kmu = sum * ex;
        k1 = sum1 * (2.0 / x) * ex;
        return;
    }
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d, delh = d;
    double q1 = 0.0, q2 = 1.0;
    const double a1 = 0.25 - mu2;
    double q = a1, c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    int i = 2;
    for (; i <= kMaxIter; ++i) {
        const double di = static_cast<double>(i);
        a -= 2.0 * (di - 1.0);
        c = -a * c / di;
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < kEps) break;
    }
    if (i > kMaxIter) throw NumericalError("bessel K: continued fraction did not converge");
    h = a1 * h;
    kmu = std::sqrt(std::numbers::pi / (2.0 * x)) / s;
    k1 = kmu * (mu + x + 0.5 - h) / x;
}

// e^x K_nu and e^x K_{nu+1} for nu >= 0, up to a common factor e^log_scale.
ScaledPair scaled_pair(double nu, double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw NumericalError("bessel K: argument must be positive and finite (got " +
                             std::to_string(x) + ")");
    }
    if (!(nu >= 0.0) || !std::isfinite(nu)) throw NumericalError("bessel K: bad order");
    const int nl = static_cast<int>(std::floor(nu + 0.5));
    const double mu = nu - nl;
    double kmu, k1;
    base_pair(mu, x, kmu, k1);
    double log_scale = 0.0;
    const double two_over_x = 2.0 / x;
    for (int i = 1; i <= nl; ++i) {
        const double next = (mu + i) * two_over_x * k1 + kmu;
        kmu = k1;
        k1 = next;
        if (k1 > kRescale) {
            kmu /= kRescale;
            k1 /= kRescale;
            log_scale += std::log(kRescale);
        }
    }
    return {kmu, k1, log_scale};
}

}  // namespace

double bessel_k_scaled(double nu, double x) {
    const ScaledPair p = scaled_pair(std::abs(nu), x);
    const double v = p.k0 * std::exp(p.log_scale);
    if (!std::isfinite(v)) throw NumericalError("bessel K: scaled value overflows");
    return v;
}

double log_bessel_k(double nu, double x) {
    const ScaledPair p = scaled_pair(std::abs(nu), x);
    return std::log(p.k0) + p.log_scale - x;
}

double bessel_k_ratio(double nu, double x) {
    const double lower = nu - 1.0;
    if (lower >= 0.0) {
        const ScaledPair p = scaled_pair(lower, x);
        return p.k1 / p.k0;
    }
    if (nu >= 0.0) {
        // K_{nu-1} = K_{1-nu}
        const ScaledPair num = scaled_pair(nu, x);
        const ScaledPair den = scaled_pair(-lower, x);
        return num.k0 / den.k0 * std::exp(num.log_scale - den.log_scale);
    }
    // K_nu = K_{-nu} and K_{nu-1} = K_{1-nu}, with 1 - nu = -nu + 1
    const ScaledPair p = scaled_pair(-nu, x);
    return p.k0 / p.k1;
}

}  // namespace besi
