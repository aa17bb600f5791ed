#include "besi/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "besi/bessel.hpp"
#include "besi/error.hpp"

namespace besi {

void SolverConfig::validate() const {
    if (max_outer_iters < 1 || max_inner_iters < 1) {
        throw ConstraintError("solver: iteration caps must be positive");
    }
    if (!(outer_tol > 0.0) || !(inner_tol > 0.0)) {
        throw ConstraintError("solver: tolerances must be positive");
    }
    if (!(lqa_epsilon > 0.0)) throw ConstraintError("solver: lqa_epsilon must be positive");
    if (!(bessel_delta >= 0.0)) throw ConstraintError("solver: bessel_delta must be >= 0");
    if (!(rescale_mu > 0.0 && rescale_mu < 1.0)) {
        throw ConstraintError("solver: rescale_mu must lie in (0, 1)");
    }
}

std::string to_string(SolveStatus status) {
    return status == SolveStatus::Converged ? "converged" : "max-iters";
}

namespace {

constexpr double kTinyVariance = 1e-280;

double relative_change(const Vector& next, const Vector& prev) {
    return (next - prev).norm() / std::max(prev.norm(), 1e-30);
}

void check_problem(const WhitenedProblem& problem, Index params) {
    if (problem.d < 1 || problem.operator_.cols() % problem.d != 0) {
        throw ShapeError("problem: column count is not a multiple of d");
    }
    if (problem.data.size() != problem.m()) throw ShapeError("problem: data length != m");
    if (params != problem.n()) {
        throw ShapeError("prior parameter count " + std::to_string(params) +
                         " != source count " + std::to_string(problem.n()));
    }
}

void check_positive(const Vector& v, const char* what) {
    for (Index k = 0; k < v.size(); ++k) {
        if (!(v[k] > 0.0) || !std::isfinite(v[k])) {
            throw ConstraintError(std::string(what) + " " + std::to_string(k) + " is not positive");
        }
    }
}

void record_gamma(SolveTrace& trace, const Vector& gamma) {
    trace.gamma_min.push_back(gamma.size() ? gamma.minCoeff() : 0.0);
    trace.gamma_max.push_back(gamma.size() ? gamma.maxCoeff() : 0.0);
    trace.gamma_mean.push_back(gamma.size() ? gamma.mean() : 0.0);
}

double block_norm(const Vector& x, Index k, Index d, int p) {
    const auto block = x.segment(k * d, d);
    return p == 1 ? block.lpNorm<1>() : block.norm();
}

double half_residual(const WhitenedProblem& problem, const Vector& x) {
    return 0.5 * (problem.operator_ * x - problem.data).squaredNorm();
}

}  // namespace

Vector expand_blocks(const Vector& per_block, Index d) {
    Vector out(per_block.size() * d);
    for (Index k = 0; k < per_block.size(); ++k) out.segment(k * d, d).setConstant(per_block[k]);
    return out;
}

Vector ridge_solve(const Matrix& A, const Vector& b, const Vector& variances) {
    const Index n = A.cols();
    const Index m = A.rows();
    if (variances.size() != n) throw ShapeError("ridge_solve: variance length != columns");
    if (b.size() != m) throw ShapeError("ridge_solve: data length != rows");
    std::vector<Index> active;
    active.reserve(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) {
        if (variances[j] > kTinyVariance) active.push_back(j);
    }
    Vector x = Vector::Zero(n);
    const Index na = static_cast<Index>(active.size());
    if (na == 0) return x;

    if (m < na) {
        // x = V A^T (A V A^T + I)^{-1} b
        Matrix B(m, na);
        for (Index a = 0; a < na; ++a) B.col(a) = A.col(active[a]) * std::sqrt(variances[active[a]]);
        Matrix K = Matrix::Identity(m, m);
        K.selfadjointView<Eigen::Lower>().rankUpdate(B);
        Eigen::LLT<Matrix, Eigen::Lower> llt(K);
        if (llt.info() != Eigen::Success) throw NumericalError("ridge_solve: dual system not SPD");
        const Vector z = llt.solve(b);
        for (Index a = 0; a < na; ++a) {
            const Index j = active[a];
            x[j] = variances[j] * A.col(j).dot(z);
        }
        return x;
    }

    Matrix Aa(m, na);
    Vector inv_v(na);
    for (Index a = 0; a < na; ++a) {
        Aa.col(a) = A.col(active[a]);
        inv_v[a] = 1.0 / variances[active[a]];
    }
    Matrix H = Matrix::Zero(na, na);
    H.selfadjointView<Eigen::Lower>().rankUpdate(Aa.transpose());
    H.diagonal() += inv_v;
    Eigen::LLT<Matrix, Eigen::Lower> llt(H);
    if (llt.info() != Eigen::Success) throw NumericalError("ridge_solve: primal system not SPD");
    const Vector xa = llt.solve(Aa.transpose() * b);
    for (Index a = 0; a < na; ++a) x[active[a]] = xa[a];
    return x;
}

// ---------------------------------------------------------------- wMNE

SolveResult solve_wmne(const WhitenedProblem& problem, const Vector& weights) {
    check_problem(problem, weights.size());
    check_positive(weights, "weight");
    SolveResult out;
    const Vector v = expand_blocks((2.0 * weights).cwiseInverse(), problem.d);
    Vector x = ridge_solve(problem.operator_, problem.data, v);
    out.trace.solver_id = "wMNE";
    out.trace.objective.push_back(half_residual(problem, x) +
                                  (weights.array() *
                                   block_amplitudes(x, problem.d).array().square())
                                      .sum());
    out.trace.step.push_back(0.0);
    out.trace.iterations = 1;
    out.trace.status = SolveStatus::Converged;
    out.first_iterate = x;
    out.estimate = SourceEstimate(std::move(x), problem.d);
    return out;
}

SolveResult solve_wmne(const LeadField& L, const Measurement& y, const Vector& weights) {
    return solve_wmne(whiten(L, y), weights);
}

// ---------------------------------------------------------------- MM-LQA

double penalized_objective(const WhitenedProblem& problem, const Vector& x, const Vector& weights,
                           int p) {
    double penalty = 0.0;
    for (Index k = 0; k < weights.size(); ++k) penalty += weights[k] * block_norm(x, k, problem.d, p);
    return half_residual(problem, x) + penalty;
}

namespace {

// sum_k w_k sum phi(t), phi(t) = t - e ln(t + e): the smooth penalty that the
// reweighted quadratic majorizes.
double smoothed_penalty(const Vector& x, const Vector& weights, Index d, int p, double e) {
    auto phi = [e](double t) { return t - e * std::log(t + e); };
    double total = 0.0;
    for (Index k = 0; k < weights.size(); ++k) {
        double s = 0.0;
        if (p == 1) {
            for (Index i = 0; i < d; ++i) s += phi(std::abs(x[k * d + i]));
        } else {
            s = phi(x.segment(k * d, d).norm());
        }
        total += weights[k] * s;
    }
    return total;
}

Vector lqa_variances(const Vector& x, const Vector& weights, Index d, int p, double e) {
    Vector v(x.size());
    for (Index k = 0; k < weights.size(); ++k) {
        if (p == 1) {
            for (Index i = 0; i < d; ++i) v[k * d + i] = (std::abs(x[k * d + i]) + e) / weights[k];
        } else {
            v.segment(k * d, d).setConstant((x.segment(k * d, d).norm() + e) / weights[k]);
        }
    }
    return v;
}

}  // namespace

SolveResult solve_mm_lqa(const WhitenedProblem& problem, const Vector& weights, int p,
                         const SolverConfig& config, const Vector& start) {
    config.validate();
    if (p != 1 && p != 2) throw ConstraintError("MM-LQA: p must be 1 or 2");
    check_problem(problem, weights.size());
    check_positive(weights, "weight");
    const Index d = problem.d;
    const double e = p == 1 ? 0.5 * config.lqa_epsilon : config.lqa_epsilon;

    Vector x;
    if (start.size() == problem.operator_.cols() && start.squaredNorm() > 0.0) {
        x = start;
    } else {
        // Laplace-prior variance 2/w^2 (group: (d+1)/w^2) as a ridge warm start
        const double c = p == 1 ? 2.0 : static_cast<double>(d + 1);
        const Vector v = expand_blocks(c * weights.array().square().inverse().matrix(), d);
        x = ridge_solve(problem.operator_, problem.data, v);
    }

    SolveResult out;
    out.trace.solver_id = p == 1 ? "wL" : "wGL";
    for (int it = 1; it <= config.max_inner_iters; ++it) {
        Vector next = ridge_solve(problem.operator_, problem.data, lqa_variances(x, weights, d, p, e));
        const double step = relative_change(next, x);
        x = std::move(next);
        if (it == 1) out.first_iterate = x;
        out.trace.objective.push_back(half_residual(problem, x) + smoothed_penalty(x, weights, d, p, e));
        out.trace.step.push_back(step);
        out.trace.iterations = it;
        if (step <= config.inner_tol) {
            out.trace.status = SolveStatus::Converged;
            break;
        }
    }
    out.trace.inner_capped = out.trace.status != SolveStatus::Converged;
    out.estimate = SourceEstimate(std::move(x), d);
    return out;
}

SolveResult solve_mm_lqa(const LeadField& L, const Measurement& y, const Vector& weights, int p,
                         const SolverConfig& config) {
    return solve_mm_lqa(whiten(L, y), weights, p, config);
}

// ---------------------------------------------------------------- gamma updates

namespace {

double cg_shape(double alpha, double s, Index d) {
    return s * alpha - 0.5 * static_cast<double>(d + 2);
}

// h(g) = -t/2 + s g (g/beta)^s - c g and its derivative.
void cg_h(double g, double t, double beta, double s, double c, double& h, double& dh) {
    const double pw = std::pow(g / beta, s);
    h = -0.5 * t + s * g * pw - c * g;
    dh = s * (s + 1.0) * pw - c;
}

void check_cg_params(double alpha, double beta, double s, Index d) {
    if (s == 0.0 || !std::isfinite(s)) throw ConstraintError("gamma update: s must be nonzero");
    if (!(alpha > 0.0)) throw ConstraintError("gamma update: alpha must be positive");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ConstraintError("gamma update: beta must be positive");
    if (d < 1) throw ConstraintError("gamma update: d must be positive");
}

double cg_root(double t, double alpha, double beta, double s, Index d, RootSolver solver) {
    const double c = cg_shape(alpha, s, d);
    const double scale = std::max(t, beta);
    double lo = 1e-12 * scale;
    double hi = 1e6 * scale;
    double hlo, hhi, dh;
    cg_h(lo, t, beta, s, c, hlo, dh);
    if (hlo >= 0.0) return 0.0;
    cg_h(hi, t, beta, s, c, hhi, dh);
    for (int expand = 0; hhi <= 0.0 && expand < 40; ++expand) {
        hi *= 1e3;
        cg_h(hi, t, beta, s, c, hhi, dh);
    }
    if (!(hhi > 0.0)) {
        std::ostringstream msg;
        msg << "gamma root not bracketed: h(" << lo << ") = " << hlo << ", h(" << hi
            << ") = " << hhi << " (||x||^2 = " << t << ", alpha = " << alpha << ", beta = " << beta
            << ", s = " << s << ")";
        throw NumericalError(msg.str());
    }

    constexpr int kMaxIter = 500;
    if (solver == RootSolver::Bisection) {
        for (int it = 0; it < kMaxIter && hi / lo - 1.0 > 4e-16; ++it) {
            const double mid = std::sqrt(lo * hi);
            double hm;
            cg_h(mid, t, beta, s, c, hm, dh);
            if (hm == 0.0) return mid;
            (hm < 0.0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    // Newton safeguarded by the bracket; bisection steps are geometric
    double g = std::sqrt(lo * hi);
    double h;
    cg_h(g, t, beta, s, c, h, dh);
    double dx_old = hi - lo;
    double dx = dx_old;
    for (int it = 0; it < kMaxIter; ++it) {
        const bool out_of_bracket = ((g - hi) * dh - h) * ((g - lo) * dh - h) > 0.0;
        if (out_of_bracket || std::abs(2.0 * h) > std::abs(dx_old * dh) || dh == 0.0) {
            // the first pass lands here with g already at the midpoint, so a
            // bisection step says nothing about convergence
            if (hi / lo - 1.0 <= 4e-16) return g;
            dx_old = dx;
            const double mid = std::sqrt(lo * hi);
            dx = g - mid;
            g = mid;
            if (lo == g || hi == g) return g;
        } else {
            dx_old = dx;
            dx = h / dh;
            const double prev = g;
            g -= dx;
            if (prev == g) return g;
            if (std::abs(dx) <= 1e-15 * g) return g;
        }
        cg_h(g, t, beta, s, c, h, dh);
        if (h == 0.0) return g;
        (h < 0.0 ? lo : hi) = g;
    }
    throw NumericalError("gamma root: Newton iteration did not converge in bracket [" +
                         std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

}  // namespace

double gamma_update_cg(double xnorm_sq, double alpha, double beta, double s, Index d,
                       RootSolver solver, bool force_root) {
    check_cg_params(alpha, beta, s, d);
    if (!(xnorm_sq >= 0.0)) throw ConstraintError("gamma update: ||x||^2 must be >= 0");
    const double t = xnorm_sq;
    const double c = cg_shape(alpha, s, d);
    if (!force_root && s == 1.0) {
        const double disc = std::sqrt(c * c + 2.0 * t / beta);
        // the c < 0 branch is rewritten to avoid cancellation
        return c >= 0.0 ? 0.5 * beta * (c + disc) : t / (disc - c);
    }
    if (!force_root && s == -1.0) {
        return (0.5 * t + beta) / (alpha + 0.5 * static_cast<double>(d + 2));
    }
    return cg_root(t, alpha, beta, s, d, solver);
}

double gamma_stationarity_residual(double gamma, double xnorm_sq, double alpha, double beta,
                                   double s, Index d) {
    const double c = cg_shape(alpha, s, d);
    double h, dh;
    cg_h(gamma, xnorm_sq, beta, s, c, h, dh);
    const double scale = 0.5 * xnorm_sq + std::abs(s * gamma * std::pow(gamma / beta, s)) +
                         std::abs(c * gamma);
    return scale > 0.0 ? std::abs(h) / scale : std::abs(h);
}

double gamma_objective_cg(double gamma, double xnorm_sq, double alpha, double beta, double s,
                          Index d) {
    const double c = cg_shape(alpha, s, d);
    return xnorm_sq / (2.0 * gamma) + std::pow(gamma / beta, s) - c * std::log(gamma);
}

double gamma_prior_mean(double alpha, double beta, double s) {
    if (s == 1.0) return alpha * beta;
    if (s == -1.0) return alpha > 1.0 ? beta / (alpha - 1.0) : beta;
    const double shift = alpha + 1.0 / s;
    if (!(shift > 0.0)) return beta;
    return beta * std::exp(std::lgamma(shift) - std::lgamma(alpha));
}

// ---------------------------------------------------------------- IAS, CG

SolveResult solve_ias_cg(const WhitenedProblem& problem, double alpha, const Vector& beta,
                         double s, const SolverConfig& config) {
    config.validate();
    check_problem(problem, beta.size());
    check_positive(beta, "beta");
    const Index n = problem.n();
    const Index d = problem.d;
    check_cg_params(alpha, beta.size() ? beta[0] : 1.0, s, d);
    const double c = cg_shape(alpha, s, d);

    Vector gamma(n);
    for (Index k = 0; k < n; ++k) {
        gamma[k] = config.gamma_init == GammaInit::Unit ? 1.0 : gamma_prior_mean(alpha, beta[k], s);
    }

    SolveResult out;
    out.gamma_initial = gamma;
    out.trace.solver_id = "wCG-IAS";
    Vector x_prev = Vector::Zero(problem.operator_.cols());
    for (int it = 1; it <= config.max_outer_iters; ++it) {
        Vector x = ridge_solve(problem.operator_, problem.data, expand_blocks(gamma, d));
        if (it == 1) out.first_iterate = x;
        double penalty = 0.0;
        for (Index k = 0; k < n; ++k) {
            const double t = x.segment(k * d, d).squaredNorm();
            gamma[k] = gamma_update_cg(t, alpha, beta[k], s, d, config.root_solver);
            if (gamma[k] > 0.0) {
                penalty += t / (2.0 * gamma[k]) + std::pow(gamma[k] / beta[k], s) -
                           c * std::log(gamma[k]);
            }
        }
        const double step = relative_change(x, x_prev);
        out.trace.objective.push_back(half_residual(problem, x) + penalty);
        out.trace.step.push_back(step);
        record_gamma(out.trace, gamma);
        out.trace.iterations = it;
        x_prev = std::move(x);
        if (step <= config.outer_tol) {
            out.trace.status = SolveStatus::Converged;
            break;
        }
    }
    out.gamma = gamma;
    out.estimate = SourceEstimate(std::move(x_prev), d);
    return out;
}

SolveResult solve_ias_cg(const LeadField& L, const Measurement& y, double alpha,
                         const Vector& beta, double s, const SolverConfig& config) {
    return solve_ias_cg(whiten(L, y), alpha, beta, s, config);
}

// ---------------------------------------------------------------- EM, CG

double em_gamma_variance(double xnorm, double alpha, double beta, Index d, double delta) {
    if (!(beta > 0.0)) throw ConstraintError("EM: beta must be positive");
    const double nu = alpha - 0.5 * static_cast<double>(d);
    const double z = std::sqrt(2.0 / beta) * xnorm;
    if (z == 0.0) return nu > 1.0 ? 2.0 * beta * (nu - 1.0) : 0.0;
    if (z < 1e-8) {
        const double kn = std::exp(log_bessel_k(nu, z));
        const double km = std::exp(log_bessel_k(nu - 1.0, z));
        if (std::isfinite(kn) && std::isfinite(km)) return beta * z * kn / (km + delta);
    }
    return beta * z * bessel_k_ratio(nu, z);
}

double em_invgamma_weight(double xnorm_sq, double alpha, double beta, Index d) {
    if (!(beta > 0.0)) throw ConstraintError("EM: beta must be positive");
    return (alpha + 0.5 * static_cast<double>(d)) / (xnorm_sq + beta);
}

namespace {

// -ln(z^nu K_nu(z)); the EM iteration for the Gamma hyperprior majorizes
// half of this penalty in ||x||^2.
double gamma_marginal_penalty(double z, double nu) {
    if (z == 0.0) {
        if (nu > 0.0) return -(std::lgamma(nu) + (nu - 1.0) * std::log(2.0));
        return 0.0;
    }
    return -(nu * std::log(z) + log_bessel_k(nu, z));
}

}  // namespace

SolveResult solve_em_cg(const WhitenedProblem& problem, double alpha, const Vector& beta,
                        double s, const SolverConfig& config) {
    config.validate();
    if (s != 1.0 && s != -1.0) throw ConstraintError("EM is available only for s = 1 or s = -1");
    check_problem(problem, beta.size());
    check_positive(beta, "beta");
    if (!(alpha > 0.0)) throw ConstraintError("EM: alpha must be positive");
    const Index n = problem.n();
    const Index d = problem.d;
    const double nu = alpha - 0.5 * static_cast<double>(d);

    Vector variance(n);
    for (Index k = 0; k < n; ++k) {
        variance[k] = config.gamma_init == GammaInit::Unit ? 1.0 : gamma_prior_mean(alpha, beta[k], s);
    }
    SolveResult out;
    out.gamma_initial = variance;
    out.trace.solver_id = "wCG-EM";
    Vector x = ridge_solve(problem.operator_, problem.data, expand_blocks(variance, d));

    for (int it = 1; it <= config.max_outer_iters; ++it) {
        for (Index k = 0; k < n; ++k) {
            const double t = x.segment(k * d, d).squaredNorm();
            variance[k] = s == 1.0 ? em_gamma_variance(std::sqrt(t), alpha, beta[k], d,
                                                       config.bessel_delta)
                                   : 1.0 / em_invgamma_weight(t, alpha, beta[k], d);
        }
        Vector next = ridge_solve(problem.operator_, problem.data, expand_blocks(variance, d));
        if (it == 1) out.first_iterate = next;
        double penalty = 0.0;
        for (Index k = 0; k < n; ++k) {
            const double t = next.segment(k * d, d).squaredNorm();
            if (s == 1.0) {
                penalty += 0.5 * gamma_marginal_penalty(std::sqrt(2.0 * t / beta[k]), nu);
            } else {
                penalty += 0.5 * (alpha + 0.5 * static_cast<double>(d)) * std::log(t + beta[k]);
            }
        }
        const double step = relative_change(next, x);
        out.trace.objective.push_back(half_residual(problem, next) + penalty);
        out.trace.step.push_back(step);
        record_gamma(out.trace, variance);
        out.trace.iterations = it;
        x = std::move(next);
        if (step <= config.outer_tol) {
            out.trace.status = SolveStatus::Converged;
            break;
        }
    }
    out.gamma = variance;
    out.estimate = SourceEstimate(std::move(x), d);
    return out;
}

SolveResult solve_em_cg(const LeadField& L, const Measurement& y, double alpha,
                        const Vector& beta, double s, const SolverConfig& config) {
    return solve_em_cg(whiten(L, y), alpha, beta, s, config);
}

// ---------------------------------------------------------------- conditional Laplace

double conditional_laplace_shape(double alpha_bar, Index d, bool group, Variant variant) {
    const double dd = static_cast<double>(d);
    if (group) return variant == Variant::IAS ? alpha_bar + dd - 1.0 : alpha_bar + dd;
    return variant == Variant::IAS ? alpha_bar : alpha_bar + 1.0;
}

double degeneracy_ratio(const WhitenedProblem& problem, const Vector& gamma, bool group,
                        Index* argmax) {
    check_problem(problem, gamma.size());
    const Vector g = problem.operator_.transpose() * problem.data;
    const Index d = problem.d;
    double best = -1.0;
    Index best_k = 0;
    for (Index k = 0; k < gamma.size(); ++k) {
        const auto block = g.segment(k * d, d);
        const double r = (group ? block.norm() : block.cwiseAbs().maxCoeff()) / gamma[k];
        if (r > best) {
            best = r;
            best_k = k;
        }
    }
    if (argmax) *argmax = best_k;
    return std::max(best, 0.0);
}

namespace {

SolveResult solve_conditional_laplace(const WhitenedProblem& problem, double alpha_bar,
                                      const Vector& beta, Variant variant, bool group,
                                      const SolverConfig& config) {
    config.validate();
    check_problem(problem, beta.size());
    check_positive(beta, "beta");
    if (!(alpha_bar > 2.0)) {
        throw ConstraintError(std::string(group ? "wCGL" : "wCL") + " needs alpha_bar > 2");
    }
    const Index n = problem.n();
    const Index d = problem.d;
    const int p = group ? 2 : 1;
    const double a = conditional_laplace_shape(alpha_bar, d, group, variant);

    Vector gamma = a * beta.cwiseInverse();
    SolveResult out;
    out.trace.solver_id = std::string(group ? "wCGL-" : "wCL-") +
                          (variant == Variant::IAS ? "IAS" : "EM");
    const double ratio = degeneracy_ratio(problem, gamma, group);
    out.trace.degeneracy_ratio = ratio;
    if (!(ratio > 0.0)) {
        throw DegenerateInputError("non-degeneracy unachievable: L^T Gamma^{-1} y is zero");
    }
    if (ratio <= 1.0) {
        // moves the largest ratio to 1/mu > 1
        gamma *= config.rescale_mu * ratio;
        out.trace.rescaled = true;
    }
    out.gamma_initial = gamma;

    Vector x = Vector::Zero(problem.operator_.cols());
    for (int it = 1; it <= config.max_outer_iters; ++it) {
        SolveResult inner = solve_mm_lqa(problem, gamma, p, config, x);
        Vector next = inner.estimate.coefficients();
        out.trace.inner_iterations.push_back(inner.trace.iterations);
        out.trace.inner_capped = out.trace.inner_capped || inner.trace.inner_capped;
        if (it == 1) out.first_iterate = next;

        double penalty = 0.0;
        for (Index k = 0; k < n; ++k) {
            const double t = block_norm(next, k, d, p);
            gamma[k] = a / (beta[k] + t);
            penalty += variant == Variant::IAS
                           ? gamma[k] * t + beta[k] * gamma[k] - a * std::log(gamma[k])
                           : a * std::log(t + beta[k]);
        }
        const double step = relative_change(next, x);
        out.trace.objective.push_back(half_residual(problem, next) + penalty);
        out.trace.step.push_back(step);
        record_gamma(out.trace, gamma);
        out.trace.iterations = it;
        x = std::move(next);
        if (step <= config.outer_tol) {
            out.trace.status = SolveStatus::Converged;
            break;
        }
    }
    out.gamma = gamma;
    out.estimate = SourceEstimate(std::move(x), d);
    return out;
}

}  // namespace

SolveResult solve_wcl(const WhitenedProblem& problem, double alpha_bar, const Vector& beta,
                      Variant variant, const SolverConfig& config) {
    return solve_conditional_laplace(problem, alpha_bar, beta, variant, false, config);
}

SolveResult solve_wcgl(const WhitenedProblem& problem, double alpha_bar, const Vector& beta,
                       Variant variant, const SolverConfig& config) {
    return solve_conditional_laplace(problem, alpha_bar, beta, variant, true, config);
}

SolveResult solve_wcl(const LeadField& L, const Measurement& y, double alpha_bar,
                      const Vector& beta, Variant variant, const SolverConfig& config) {
    return solve_wcl(whiten(L, y), alpha_bar, beta, variant, config);
}

SolveResult solve_wcgl(const LeadField& L, const Measurement& y, double alpha_bar,
                       const Vector& beta, Variant variant, const SolverConfig& config) {
    return solve_wcgl(whiten(L, y), alpha_bar, beta, variant, config);
}

// ---------------------------------------------------------------- dispatch

SolveResult solve(const PriorSpec& prior, const WhitenedProblem& problem,
                  const SolverConfig& config) {
    prior.validate();
    if (prior.d != problem.d) throw ShapeError("prior d does not match the lead field");
    SolveResult out;
    const Variant variant = prior.optimizer == Optimizer::EM ? Variant::EM : Variant::IAS;
    switch (prior.family) {
        case PriorFamily::WG:
            out = solve_wmne(problem, prior.params);
            break;
        case PriorFamily::WL:
            out = solve_mm_lqa(problem, prior.params, 1, config);
            break;
        case PriorFamily::WGL:
            out = solve_mm_lqa(problem, prior.params, 2, config);
            break;
        case PriorFamily::WCG_GA:
        case PriorFamily::WCG_IG:
        case PriorFamily::WCG_GEN: {
            // the weighting table's shape is s * alpha for s > 0
            const double alpha = prior.s > 0.0 ? prior.alpha_bar / prior.s : prior.alpha_bar;
            out = prior.optimizer == Optimizer::EM
                      ? solve_em_cg(problem, alpha, prior.params, prior.s, config)
                      : solve_ias_cg(problem, alpha, prior.params, prior.s, config);
            break;
        }
        case PriorFamily::WCL:
            out = solve_wcl(problem, prior.alpha_bar, prior.params, variant, config);
            break;
        case PriorFamily::WCGL:
            out = solve_wcgl(problem, prior.alpha_bar, prior.params, variant, config);
            break;
    }
    out.trace.solver_id = prior.id();
    return out;
}

SolveResult solve(const PriorSpec& prior, const LeadField& L, const Measurement& y,
                  const SolverConfig& config) {
    return solve(prior, whiten(L, y), config);
}

}  // namespace besi
