#pragma once

// Fidelity lower bounds for fast-forwarded evolution, generalization terms
// and data-size prescriptions.

#include <cmath>
#include <string>

#include "json.hpp"
#include "reff/costs.hpp"
#include "reff/errors.hpp"

namespace reff {

/// c (sqrt(K ln K / N) + sqrt(ln(1/delta) / N)), natural log.
inline double generalization_term(double K, double N, double delta, double c) {
    detail::require(K >= 1 && N >= 1, "generalization_term: K and N must be >= 1");
    detail::require(delta > 0 && delta <= 1, "generalization_term: delta must be in (0, 1]");
    detail::require(c >= 0, "generalization_term: c must be >= 0");
    const double klnk = K == 1 ? 0.0 : K * std::log(K);
    return c * (std::sqrt(klnk / N) + std::sqrt(std::log(1.0 / delta) / N));
}

struct BoundInputs {
    int n = 1;
    double M = 1;
    double trotter_eps = 0.0;
    CostValue cost;
    double K = 1;
    double N = 1;
    double delta = 0.05;
    double gen_constant = 1.0;

    double dim() const { return std::pow(2.0, n); }

    void validate() const {
        detail::require(n >= 1, "BoundInputs: n must be >= 1");
        detail::require(M >= 0, "BoundInputs: M must be >= 0");
        detail::require(trotter_eps >= 0, "BoundInputs: trotter_eps must be >= 0");
        detail::require(delta > 0 && delta <= 1, "BoundInputs: delta must be in (0, 1]");
        detail::require(gen_constant >= 0, "BoundInputs: gen_constant must be >= 0");
    }
};

enum class BoundKind { PRODUCT_GLOBAL, PRODUCT_LOCAL, ENTANGLED_GLOBAL };

inline std::string to_string(BoundKind k) {
    switch (k) {
        case BoundKind::PRODUCT_GLOBAL: return "PRODUCT_GLOBAL";
        case BoundKind::PRODUCT_LOCAL: return "PRODUCT_LOCAL";
        case BoundKind::ENTANGLED_GLOBAL: return "ENTANGLED_GLOBAL";
    }
    return "?";
}

struct BoundReport {
    BoundKind kind = BoundKind::PRODUCT_GLOBAL;
    BoundInputs inputs;
    double lower_bound = 0.0;    // clamped into [0, 1]
    double raw = 0.0;            // with the generalization term at gen_constant
    double raw_no_gen = 0.0;     // same bound with c = 0
    double lower_bound_no_gen = 0.0;
    double trotter_term = 0.0;   // 2 M^2 eps^2 / (d + 1)
    double cost_term = 0.0;      // 2 M^2 * (cost factor) * C
    double generalization = 0.0; // M^2 * (n or 1) * gen
};

namespace detail {

inline BoundReport assemble_bound(BoundKind kind, const BoundInputs& in, double cost_factor, double gen_factor) {
    in.validate();
    BoundReport r;
    r.kind = kind;
    r.inputs = in;
    const double d = in.dim();
    const double m2 = in.M * in.M;
    r.trotter_term = 2 * m2 * in.trotter_eps * in.trotter_eps / (d + 1);
    r.cost_term = 2 * m2 * cost_factor * in.cost.value;
    r.generalization = m2 * gen_factor * generalization_term(in.K, in.N, in.delta, in.gen_constant);
    r.raw_no_gen = 1.0 - r.trotter_term - r.cost_term;
    r.raw = r.raw_no_gen - r.generalization;
    r.lower_bound = std::clamp(r.raw, 0.0, 1.0);
    r.lower_bound_no_gen = std::clamp(r.raw_no_gen, 0.0, 1.0);
    return r;
}

inline void require_kind(const CostValue& c, std::initializer_list<CostKind> allowed, const char* what) {
    for (CostKind k : allowed)
        if (c.kind == k) return;
    throw InvalidArgument(std::string(what) + ": cost kind " + to_string(c.kind) + " not accepted");
}

}  // namespace detail

/// 1 - 2M^2 [eps^2/(d+1) + 4 C^G] - M^2 gen
inline BoundReport bound_product_global(const BoundInputs& in) {
    detail::require_kind(in.cost, {CostKind::EMP_GLOBAL, CostKind::EXP_PRODUCT_G}, "bound_product_global");
    return detail::assemble_bound(BoundKind::PRODUCT_GLOBAL, in, 4.0, 1.0);
}

/// 1 - 2M^2 [eps^2/(d+1) + 4n C^L] - M^2 n gen
inline BoundReport bound_product_local(const BoundInputs& in) {
    detail::require_kind(in.cost, {CostKind::EMP_LOCAL, CostKind::EXP_PRODUCT_L_MC}, "bound_product_local");
    return detail::assemble_bound(BoundKind::PRODUCT_LOCAL, in, 4.0 * in.n, static_cast<double>(in.n));
}

/// 1 - 2M^2 [eps^2/(d+1) + 2 C_E] - M^2 gen
inline BoundReport bound_entangled_global(const BoundInputs& in) {
    detail::require_kind(in.cost, {CostKind::EMP_GLOBAL, CostKind::EXP_ENTANGLED_G}, "bound_entangled_global");
    return detail::assemble_bound(BoundKind::ENTANGLED_GLOBAL, in, 2.0, 1.0);
}

/// X = eps/sqrt(2d) + sqrt(1 - sqrt(1 - c_hst)); returns
/// 1 - d/(d+1) M^2 X^2 (2 - M^2 X^2) when M X <= 1, else 0.
inline double bound_nested_exact(double d, double M, double trotter_eps, double c_hst) {
    detail::require(c_hst >= 0 && c_hst <= 1, "bound_nested_exact: c_hst must be in [0, 1]");
    detail::require(d >= 1 && M >= 0 && trotter_eps >= 0, "bound_nested_exact: bad inputs");
    const double x = trotter_eps / std::sqrt(2 * d) + std::sqrt(1.0 - std::sqrt(1.0 - c_hst));
    const double mx = M * x;
    if (mx > 1.0) return 0.0;
    const double y = mx * mx;
    return 1.0 - d / (d + 1) * y * (2.0 - y);
}

/// ceil(M0^4 K ln K / (eps/2)^2), with K ln K taken as 1 when K = 1.
inline std::size_t required_dataset_size(double M0, double K, double eps_target) {
    detail::require(M0 >= 1 && K >= 1 && eps_target > 0, "required_dataset_size: bad inputs");
    const double klnk = K == 1 ? 1.0 : K * std::log(K);
    const double half = eps_target / 2;
    const double n = std::pow(M0, 4) * klnk / (half * half);
    return static_cast<std::size_t>(std::ceil(n - 1e-9 * n));
}

struct ThresholdValue {
    double value = 0.0;
    bool certifiable = true;
};

/// eps/(8 M0^2) - eps_trot^2 / (2 (d + 1)). Negative means no certificate.
inline ThresholdValue remark_threshold(double eps_target, double M0, double trotter_eps, double d) {
    detail::require(M0 >= 1 && d >= 1, "remark_threshold: bad inputs");
    const double v = eps_target / (8 * M0 * M0) - trotter_eps * trotter_eps / (2 * (d + 1));
    return {v, v >= 0};
}

inline nlohmann::json to_json(const BoundReport& r) {
    const auto& in = r.inputs;
    return {{"kind", to_string(r.kind)},
            {"lower_bound", r.lower_bound},
            {"raw", r.raw},
            {"lower_bound_c0", r.lower_bound_no_gen},
            {"raw_c0", r.raw_no_gen},
            {"components",
             {{"trotter", r.trotter_term}, {"cost", r.cost_term}, {"generalization", r.generalization}}},
            {"inputs",
             {{"n", in.n},
              {"d", in.dim()},
              {"M", in.M},
              {"trotter_eps", in.trotter_eps},
              {"cost", to_json(in.cost)},
              {"K", in.K},
              {"N", in.N},
              {"delta", in.delta},
              {"gen_constant", in.gen_constant}}}};
}

}  // namespace reff
