#pragma once

#include <string>
#include <vector>

#include "besi/model.hpp"
#include "besi/types.hpp"
#include "besi/weighting.hpp"

namespace besi {

enum class RootSolver { Newton, Bisection };

/// Starting hyperparameters for the conditionally Gaussian solvers: all ones,
/// or the prior mean of each gamma_k.
enum class GammaInit { Unit, PriorMean };

struct SolverConfig {
    int max_outer_iters = 200;
    int max_inner_iters = 200;
    double outer_tol = 1e-6;     // relative change in x
    double inner_tol = 1e-8;     // relative change in x inside MM-LQA
    double lqa_epsilon = 1e-8;
    double bessel_delta = 1e-12;
    double rescale_mu = 0.9;     // in (0, 1)
    RootSolver root_solver = RootSolver::Newton;
    GammaInit gamma_init = GammaInit::Unit;

    /// Throws ConstraintError unless tolerances and iteration caps are
    /// positive, epsilon > 0, delta >= 0 and 0 < mu < 1.
    void validate() const;
};

enum class SolveStatus { Converged, MaxIterations };

std::string to_string(SolveStatus status);

/// Per-iteration diagnostics. Index t holds the state after outer step t.
struct SolveTrace {
    std::string solver_id;
    std::vector<double> objective;
    std::vector<double> step;  // ||x_t - x_{t-1}|| / max(||x_{t-1}||, 1e-30)
    std::vector<double> gamma_min;
    std::vector<double> gamma_max;
    std::vector<double> gamma_mean;
    std::vector<int> inner_iterations;
    SolveStatus status = SolveStatus::MaxIterations;
    int iterations = 0;
    bool inner_capped = false;   // some MM-LQA call hit max_inner_iters
    double degeneracy_ratio = 0.0;  // before any rescaling
    bool rescaled = false;
};

struct SolveResult {
    SourceEstimate estimate;
    Vector gamma;          // final hyperparameters (empty for wMNE/MM)
    Vector gamma_initial;  // after the non-degeneracy rescale, if any
    Vector first_iterate;  // x after the first outer x-step
    SolveTrace trace;
};

// -- quadratic core -------------------------------------------------------

/// argmin 0.5 ||A x - b||^2 + 0.5 sum_j x_j^2 / v_j with v_j >= 0 (v_j = 0
/// pins x_j to zero). Uses the m x m dual form when m is smaller than the
/// number of active columns and the primal form on the active set
/// otherwise.
Vector ridge_solve(const Matrix& A, const Vector& b, const Vector& variances);

/// Expands per-block values to per-coefficient values.
Vector expand_blocks(const Vector& per_block, Index d);

// -- closed form -----------------------------------------------------------

/// argmin 0.5 ||y - L x||^2_Gamma + sum_k w_k ||x_k||^2.
SolveResult solve_wmne(const WhitenedProblem& problem, const Vector& weights);
SolveResult solve_wmne(const LeadField& L, const Measurement& y, const Vector& weights);

// -- MM-LQA ----------------------------------------------------------------

/// Iteratively reweighted ridge for
///   0.5 ||A x - b||^2 + sum_k w_k ||x_k||_p,   p in {1, 2}.
/// p = 1 penalizes each coefficient of block k with w_k.
/// `start` may be empty; a zero start is replaced by a ridge solution.
/// The trace objective is the epsilon-smoothed surrogate, which the
/// iteration decreases monotonically.
SolveResult solve_mm_lqa(const WhitenedProblem& problem, const Vector& weights, int p,
                         const SolverConfig& config, const Vector& start = Vector());
SolveResult solve_mm_lqa(const LeadField& L, const Measurement& y, const Vector& weights, int p,
                         const SolverConfig& config);

/// Exact (unsmoothed) objective 0.5 ||A x - b||^2 + sum_k w_k ||x_k||_p.
double penalized_objective(const WhitenedProblem& problem, const Vector& x, const Vector& weights,
                           int p);

// -- conditionally Gaussian ------------------------------------------------

/// Hyperprior p(gamma) ~ gamma^{s alpha - 1} exp(-(gamma / beta)^s).
/// gamma_k = argmin ||x_k||^2 / (2 gamma) + (d/2) ln gamma - ln p(gamma).
/// s = 1 and s = -1 use closed forms unless force_root is set.
double gamma_update_cg(double xnorm_sq, double alpha, double beta, double s, Index d,
                       RootSolver solver = RootSolver::Newton, bool force_root = false);

/// Normalized residual of the gamma stationarity equation
///   -||x||^2 / 2 + (s / beta^s) gamma^{s+1} - (s alpha - (d+2)/2) gamma = 0.
double gamma_stationarity_residual(double gamma, double xnorm_sq, double alpha, double beta,
                                   double s, Index d);

/// One-dimensional objective minimized by gamma_update_cg.
double gamma_objective_cg(double gamma, double xnorm_sq, double alpha, double beta, double s,
                          Index d);

/// Prior mean of gamma under the hyperprior above.
double gamma_prior_mean(double alpha, double beta, double s);

SolveResult solve_ias_cg(const WhitenedProblem& problem, double alpha, const Vector& beta,
                         double s, const SolverConfig& config);
SolveResult solve_ias_cg(const LeadField& L, const Measurement& y, double alpha,
                         const Vector& beta, double s, const SolverConfig& config);

/// E-step prior variance of block k for the Gamma hyperprior:
///   sqrt(2 beta) ||x|| K_nu(z) / (K_{nu-1}(z) + delta),  nu = alpha - d/2,
///   z = sqrt(2 / beta) ||x||.
/// For z < 1e-8 the small-argument asymptotics are used; at z = 0 the limit
/// is 2 beta (nu - 1) for nu > 1 and 0 otherwise.
double em_gamma_variance(double xnorm, double alpha, double beta, Index d, double delta);

/// E-step weight for the inverse-gamma hyperprior,
///   w = (alpha + d/2) / (||x||^2 + beta); the prior variance is 1 / w.
double em_invgamma_weight(double xnorm_sq, double alpha, double beta, Index d);

SolveResult solve_em_cg(const WhitenedProblem& problem, double alpha, const Vector& beta,
                        double s, const SolverConfig& config);
SolveResult solve_em_cg(const LeadField& L, const Measurement& y, double alpha,
                        const Vector& beta, double s, const SolverConfig& config);

// -- conditionally (group-)Laplace -----------------------------------------

enum class Variant { IAS, EM };

/// gamma update: a / (beta + ||x||) with a = alpha_bar (wCL IAS),
/// alpha_bar + 1 (wCL EM), alpha_bar + d - 1 (wCGL IAS), alpha_bar + d
/// (wCGL EM). The same a / beta is the initial value.
double conditional_laplace_shape(double alpha_bar, Index d, bool group, Variant variant);

/// max_k ratio of |L^T Gamma^{-1} y| restricted to block k (max-abs for
/// wCL, l2 for wCGL) over gamma_k. `argmax` receives the lowest maximizing
/// block.
double degeneracy_ratio(const WhitenedProblem& problem, const Vector& gamma, bool group,
                        Index* argmax = nullptr);

SolveResult solve_wcl(const WhitenedProblem& problem, double alpha_bar, const Vector& beta,
                      Variant variant, const SolverConfig& config);
SolveResult solve_wcgl(const WhitenedProblem& problem, double alpha_bar, const Vector& beta,
                       Variant variant, const SolverConfig& config);
SolveResult solve_wcl(const LeadField& L, const Measurement& y, double alpha_bar,
                      const Vector& beta, Variant variant, const SolverConfig& config);
SolveResult solve_wcgl(const LeadField& L, const Measurement& y, double alpha_bar,
                       const Vector& beta, Variant variant, const SolverConfig& config);

// -- dispatch ---------------------------------------------------------------

/// Routes a validated PriorSpec to its solver and stamps trace.solver_id.
SolveResult solve(const PriorSpec& prior, const WhitenedProblem& problem,
                  const SolverConfig& config);
SolveResult solve(const PriorSpec& prior, const LeadField& L, const Measurement& y,
                  const SolverConfig& config);

}  // namespace besi
