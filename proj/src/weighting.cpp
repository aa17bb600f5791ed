#include "besi/weighting.hpp"

#include <cctype>
#include <cmath>

#include "besi/error.hpp"

namespace besi {

void SnrContext::validate() const {
    if (!(snr > 1.0)) {
        throw ConstraintError("snr must exceed 1 (got " + std::to_string(snr) + ")");
    }
    if (q < 1) throw ConstraintError("q must be a positive integer");
    if (!(gamma_trace > 0.0)) throw ConstraintError("noise covariance trace must be positive");
    for (Index k = 0; k < block_norms_sq.size(); ++k) {
        if (!(block_norms_sq[k] > 0.0) || !std::isfinite(block_norms_sq[k])) {
            throw ConstraintError("block norm " + std::to_string(k) + " is not positive");
        }
    }
}

SnrContext SnrContext::from(const LeadField& lead_field, const NoiseModel& noise, double snr,
                            Index q) {
    if (noise.m() != lead_field.m()) throw ShapeError("SnrContext: noise size != m");
    SnrContext ctx{snr, q, noise.trace(), lead_field.block_norms_sq()};
    ctx.validate();
    return ctx;
}

double snr_from_data(const Measurement& y) {
    const double trace = y.noise().trace();
    if (!(trace > 0.0)) throw ConstraintError("snr_from_data: zero noise trace");
    const double snr = (y.values() - y.noise().mean()).squaredNorm() / trace;
    return std::max(snr, 1.0 + 1e-6);
}

double theta_from_snr(const SnrContext& ctx, Index k) {
    ctx.validate();
    if (k < 0 || k >= ctx.n()) throw ShapeError("theta_from_snr: index out of range");
    return (ctx.snr - 1.0) * ctx.gamma_trace /
           (static_cast<double>(ctx.q) * ctx.block_norms_sq[k]);
}

Vector thetas(const SnrContext& ctx) {
    ctx.validate();
    const double num = (ctx.snr - 1.0) * ctx.gamma_trace / static_cast<double>(ctx.q);
    return num * ctx.block_norms_sq.cwiseInverse();
}

Vector weights_gaussian(const SnrContext& ctx) { return (2.0 * thetas(ctx)).cwiseInverse(); }

Vector weights_laplace(const SnrContext& ctx) {
    return (2.0 * thetas(ctx).cwiseInverse()).cwiseSqrt();
}

Vector weights_group_laplace(const SnrContext& ctx, Index d) {
    if (d < 1) throw ConstraintError("d must be positive");
    return (static_cast<double>(d + 1) * thetas(ctx).cwiseInverse()).cwiseSqrt();
}

namespace {

bool is_group_laplace(double alpha_bar, double s, Index d) {
    return s == 1.0 && std::abs(alpha_bar - 0.5 * static_cast<double>(d + 1)) < 1e-12;
}

// beta / theta for the conditionally Gaussian families.
double beta_factor(double alpha_bar, double s, Index d, BetaRule rule) {
    if (d < 1) throw ConstraintError("d must be positive");
    if (s == 0.0 || !std::isfinite(s)) throw ConstraintError("s must be nonzero");
    if (rule == BetaRule::Auto) {
        rule = is_group_laplace(alpha_bar, s, d) ? BetaRule::GroupLaplaceTable : BetaRule::General;
    }
    const double dd = static_cast<double>(d);
    switch (rule) {
        case BetaRule::GroupLaplaceTable:
            return 2.0 / (dd + 2.0);
        case BetaRule::GroupLaplaceMoment:
            return 2.0 / (dd + 1.0);
        case BetaRule::General:
        case BetaRule::Auto:
            break;
    }
    if (s == -1.0) {
        if (!(alpha_bar > 1.0)) throw ConstraintError("inverse-gamma hyperprior needs alpha_bar > 1");
        return alpha_bar - 1.0;
    }
    if (s < 0.0) {
        throw ConstraintError("general beta formula is undefined for s < 0 other than s = -1");
    }
    if (!(alpha_bar > 0.0)) throw ConstraintError("alpha_bar must be positive");
    return std::exp(std::lgamma(alpha_bar / s) - std::lgamma((alpha_bar + 1.0) / s));
}

double lomax_factor(double alpha_bar) {
    if (!(alpha_bar > 2.0)) {
        throw ConstraintError("conditional Laplace needs alpha_bar > 2 (got " +
                              std::to_string(alpha_bar) + ")");
    }
    return (alpha_bar - 1.0) * (alpha_bar - 2.0);
}

}  // namespace

double beta_cg(const SnrContext& ctx, double alpha_bar, double s, Index d, Index k, BetaRule rule) {
    return beta_factor(alpha_bar, s, d, rule) * theta_from_snr(ctx, k);
}

Vector betas_cg(const SnrContext& ctx, double alpha_bar, double s, Index d, BetaRule rule) {
    return beta_factor(alpha_bar, s, d, rule) * thetas(ctx);
}

double beta_wcl(const SnrContext& ctx, double alpha_bar, Index k) {
    return std::sqrt(theta_from_snr(ctx, k) * lomax_factor(alpha_bar) / 2.0);
}

double beta_wcgl(const SnrContext& ctx, double alpha_bar, Index d, Index k) {
    if (d < 1) throw ConstraintError("d must be positive");
    return std::sqrt(theta_from_snr(ctx, k) * lomax_factor(alpha_bar) / static_cast<double>(d + 1));
}

Vector betas_wcl(const SnrContext& ctx, double alpha_bar) {
    return (thetas(ctx) * (lomax_factor(alpha_bar) / 2.0)).cwiseSqrt();
}

Vector betas_wcgl(const SnrContext& ctx, double alpha_bar, Index d) {
    if (d < 1) throw ConstraintError("d must be positive");
    return (thetas(ctx) * (lomax_factor(alpha_bar) / static_cast<double>(d + 1))).cwiseSqrt();
}

std::string to_string(PriorFamily family) {
    switch (family) {
        case PriorFamily::WG: return "wG";
        case PriorFamily::WL: return "wL";
        case PriorFamily::WGL: return "wGL";
        case PriorFamily::WCG_GA: return "wCG-Ga";
        case PriorFamily::WCG_IG: return "wCG-IG";
        case PriorFamily::WCG_GEN: return "wCG-Gen";
        case PriorFamily::WCL: return "wCL";
        case PriorFamily::WCGL: return "wCGL";
    }
    return "?";
}

std::string to_string(Optimizer optimizer) {
    switch (optimizer) {
        case Optimizer::ClosedForm: return "closed";
        case Optimizer::MM: return "MM";
        case Optimizer::IAS: return "IAS";
        case Optimizer::EM: return "EM";
    }
    return "?";
}

namespace {

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

PriorFamily parse_family(const std::string& name) {
    const std::string n = lower(name);
    if (n == "wg" || n == "wmne") return PriorFamily::WG;
    if (n == "wl") return PriorFamily::WL;
    if (n == "wgl") return PriorFamily::WGL;
    if (n == "wcg-ga" || n == "wcg_ga" || n == "cg-ga") return PriorFamily::WCG_GA;
    if (n == "wcg-ig" || n == "wcg_ig" || n == "cg-ig") return PriorFamily::WCG_IG;
    if (n == "wcg-gen" || n == "wcg_gen" || n == "cg-gen") return PriorFamily::WCG_GEN;
    if (n == "wcl") return PriorFamily::WCL;
    if (n == "wcgl") return PriorFamily::WCGL;
    throw ConstraintError("unknown prior family '" + name + "'");
}

std::string to_string(BetaRule rule) {
    switch (rule) {
        case BetaRule::Auto: return "auto";
        case BetaRule::General: return "general";
        case BetaRule::GroupLaplaceTable: return "group_laplace_table";
        case BetaRule::GroupLaplaceMoment: return "group_laplace_moment";
    }
    return "auto";
}

BetaRule parse_beta_rule(const std::string& name) {
    const std::string n = lower(name);
    if (n == "auto") return BetaRule::Auto;
    if (n == "general") return BetaRule::General;
    if (n == "group_laplace_table" || n == "table") return BetaRule::GroupLaplaceTable;
    if (n == "group_laplace_moment" || n == "moment") return BetaRule::GroupLaplaceMoment;
    throw ConstraintError("unknown beta rule '" + name + "'");
}

Optimizer parse_optimizer(const std::string& name) {
    const std::string n = lower(name);
    if (n == "closed" || n == "closedform" || n == "closed-form") return Optimizer::ClosedForm;
    if (n == "mm" || n == "mm-lqa") return Optimizer::MM;
    if (n == "ias") return Optimizer::IAS;
    if (n == "em") return Optimizer::EM;
    throw ConstraintError("unknown optimizer '" + name + "'");
}

double default_alpha_bar(PriorFamily family, Index d) {
    switch (family) {
        case PriorFamily::WCG_GA:
        case PriorFamily::WCG_GEN:
            // keeps alpha - (d+2)/2 > 0 so gamma stays positive at x = 0
            return 0.5 * static_cast<double>(d + 2) + 0.5;
        case PriorFamily::WCG_IG:
            return 1.5;
        case PriorFamily::WCL:
        case PriorFamily::WCGL:
            return 2.5;
        default:
            return 0.0;
    }
}

void PriorSpec::validate() const {
    if (d < 1 || d > 3) throw ConstraintError("prior: d must be 1, 2 or 3");
    const bool plain = family == PriorFamily::WG || family == PriorFamily::WL ||
                       family == PriorFamily::WGL;
    if (plain) {
        if (optimizer != Optimizer::ClosedForm && optimizer != Optimizer::MM) {
            throw ConstraintError("prior " + to_string(family) + " admits closed-form or MM only");
        }
        if (family == PriorFamily::WG && optimizer != Optimizer::ClosedForm) {
            throw ConstraintError("wG is solved in closed form");
        }
        if (family != PriorFamily::WG && optimizer != Optimizer::MM) {
            throw ConstraintError(to_string(family) + " is solved by MM");
        }
    } else if (optimizer != Optimizer::IAS && optimizer != Optimizer::EM) {
        throw ConstraintError("prior " + to_string(family) + " requires IAS or EM");
    }
    switch (family) {
        case PriorFamily::WCG_IG:
            if (!(alpha_bar > 1.0)) throw ConstraintError("wCG-IG needs alpha_bar > 1");
            if (s != -1.0) throw ConstraintError("wCG-IG has s = -1");
            break;
        case PriorFamily::WCG_GA:
            if (!(alpha_bar > 0.0)) throw ConstraintError("wCG-Ga needs alpha_bar > 0");
            if (s != 1.0) throw ConstraintError("wCG-Ga has s = 1");
            break;
        case PriorFamily::WCG_GEN:
            if (s == 0.0 || !std::isfinite(s)) throw ConstraintError("wCG-Gen needs s != 0");
            if (optimizer == Optimizer::EM && s != 1.0 && s != -1.0) {
                throw ConstraintError("EM is available only for s = 1 or s = -1");
            }
            break;
        case PriorFamily::WCL:
        case PriorFamily::WCGL:
            if (!(alpha_bar > 2.0)) throw ConstraintError(to_string(family) + " needs alpha_bar > 2");
            break;
        default:
            break;
    }
    for (Index k = 0; k < params.size(); ++k) {
        if (!(params[k] > 0.0) || !std::isfinite(params[k])) {
            throw ConstraintError("prior parameter " + std::to_string(k) + " is not positive");
        }
    }
}

std::string PriorSpec::id() const {
    const std::string base = to_string(family);
    if (optimizer == Optimizer::ClosedForm || optimizer == Optimizer::MM) {
        return family == PriorFamily::WG ? "wMNE" : base;
    }
    return base + "-" + to_string(optimizer);
}

PriorSpec make_prior(PriorFamily family, Optimizer optimizer, const SnrContext& ctx, Index d,
                     double alpha_bar, double s, BetaRule rule) {
    PriorSpec spec;
    spec.family = family;
    spec.optimizer = optimizer;
    spec.d = d;
    spec.alpha_bar = alpha_bar > 0.0 ? alpha_bar : default_alpha_bar(family, d);
    switch (family) {
        case PriorFamily::WG: spec.params = weights_gaussian(ctx); break;
        case PriorFamily::WL: spec.params = weights_laplace(ctx); break;
        case PriorFamily::WGL: spec.params = weights_group_laplace(ctx, d); break;
        case PriorFamily::WCG_GA:
            spec.s = 1.0;
            spec.params = betas_cg(ctx, spec.alpha_bar, 1.0, d, rule);
            break;
        case PriorFamily::WCG_IG:
            spec.s = -1.0;
            spec.params = betas_cg(ctx, spec.alpha_bar, -1.0, d, rule);
            break;
        case PriorFamily::WCG_GEN:
            spec.s = s;
            spec.params = betas_cg(ctx, spec.alpha_bar, s, d, rule);
            break;
        case PriorFamily::WCL: spec.params = betas_wcl(ctx, spec.alpha_bar); break;
        case PriorFamily::WCGL: spec.params = betas_wcgl(ctx, spec.alpha_bar, d); break;
    }
    spec.validate();
    return spec;
}

}  // namespace besi
