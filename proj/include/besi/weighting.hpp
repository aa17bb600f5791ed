#pragma once

#include <string>

#include "besi/types.hpp"

namespace besi {

/// Inputs of the sensitivity-weighting formulas.
///
/// theta_k = (snr - 1) * gamma_trace / (q * ||L_k||_F^2) is the prior variance
/// per component that makes the expected signal power match the target SNR.
struct SnrContext {
    double snr = 0.0;
    Index q = 1;
    double gamma_trace = 0.0;
    Vector block_norms_sq;

    /// Throws ConstraintError for snr <= 1, q < 1, a non-positive trace or
    /// a non-positive block norm.
    void validate() const;

    Index n() const noexcept { return block_norms_sq.size(); }

    static SnrContext from(const LeadField& lead_field, const NoiseModel& noise, double snr,
                           Index q = 1);
};

/// ||y - mean||^2 / trace(Gamma), clipped below at 1 + 1e-6.
double snr_from_data(const Measurement& y);

double theta_from_snr(const SnrContext& ctx, Index k);
Vector thetas(const SnrContext& ctx);

/// w_k = 1 / (2 theta_k).
Vector weights_gaussian(const SnrContext& ctx);
/// w_k = sqrt(2 / theta_k).
Vector weights_laplace(const SnrContext& ctx);
/// w_k = sqrt((d + 1) / theta_k).
Vector weights_group_laplace(const SnrContext& ctx, Index d);

/// Which formula beta_cg applies.
///
/// General: beta = Gamma(a/s) / Gamma((a+1)/s) * theta for s > 0, and
/// (a - 1) * theta for s = -1. GroupLaplaceTable: 2 theta / (d + 2).
/// GroupLaplaceMoment: 2 theta / (d + 1), the variant that reproduces the
/// group-Laplace variance. Auto picks GroupLaplaceTable when s = 1 and
/// a = (d + 1) / 2, General otherwise.
enum class BetaRule { Auto, General, GroupLaplaceTable, GroupLaplaceMoment };

/// auto | general | group_laplace_table | group_laplace_moment
std::string to_string(BetaRule rule);
BetaRule parse_beta_rule(const std::string& name);

double beta_cg(const SnrContext& ctx, double alpha_bar, double s, Index d, Index k,
               BetaRule rule = BetaRule::Auto);
Vector betas_cg(const SnrContext& ctx, double alpha_bar, double s, Index d,
                BetaRule rule = BetaRule::Auto);

/// beta_k = sqrt(theta_k (a - 1)(a - 2) / 2); requires a > 2.
double beta_wcl(const SnrContext& ctx, double alpha_bar, Index k);
/// beta_k = sqrt(theta_k (a - 1)(a - 2) / (d + 1)); requires a > 2.
double beta_wcgl(const SnrContext& ctx, double alpha_bar, Index d, Index k);
Vector betas_wcl(const SnrContext& ctx, double alpha_bar);
Vector betas_wcgl(const SnrContext& ctx, double alpha_bar, Index d);

enum class PriorFamily { WG, WL, WGL, WCG_GA, WCG_IG, WCG_GEN, WCL, WCGL };
enum class Optimizer { ClosedForm, MM, IAS, EM };

std::string to_string(PriorFamily family);
std::string to_string(Optimizer optimizer);
PriorFamily parse_family(const std::string& name);
Optimizer parse_optimizer(const std::string& name);

/// Smallest half-integer shape that satisfies each family's constraint.
double default_alpha_bar(PriorFamily family, Index d);

/// Prior family, optimizer and per-location parameters.
///
/// `params` holds w_k for WG/WL/WGL and beta_k for the conditional families.
/// s is fixed by the family (1 for WCG_GA, -1 for WCG_IG) except WCG_GEN.
struct PriorSpec {
    PriorFamily family = PriorFamily::WG;
    Optimizer optimizer = Optimizer::ClosedForm;
    Index d = 1;
    double alpha_bar = 0.0;
    double s = 1.0;
    Vector params;

    /// Family/optimizer compatibility and shape constraints.
    void validate() const;

    /// Short identifier such as "wCGL-EM", used in result files.
    std::string id() const;
};

/// Computes params from the SNR context. A non-positive alpha_bar selects
/// default_alpha_bar.
PriorSpec make_prior(PriorFamily family, Optimizer optimizer, const SnrContext& ctx, Index d,
                     double alpha_bar = 0.0, double s = 1.0, BetaRule rule = BetaRule::Auto);

}  // namespace besi
