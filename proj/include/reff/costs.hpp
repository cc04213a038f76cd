#pragma once

// Empirical training costs and exact expected costs over input ensembles.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "reff/ansatz.hpp"
#include "reff/data.hpp"
#include "reff/parallel.hpp"
#include "reff/qsim.hpp"

namespace reff {

enum class CostKind { EMP_GLOBAL, EMP_LOCAL, HST, EXP_ENTANGLED_G, EXP_PRODUCT_G, EXP_PRODUCT_L_MC };

inline std::string to_string(CostKind k) {
    switch (k) {
        case CostKind::EMP_GLOBAL: return "EMP_GLOBAL";
        case CostKind::EMP_LOCAL: return "EMP_LOCAL";
        case CostKind::HST: return "HST";
        case CostKind::EXP_ENTANGLED_G: return "EXP_ENTANGLED_G";
        case CostKind::EXP_PRODUCT_G: return "EXP_PRODUCT_G";
        case CostKind::EXP_PRODUCT_L_MC: return "EXP_PRODUCT_L_MC";
    }
    return "?";
}

inline CostKind cost_kind_from_string(const std::string& s) {
    for (CostKind k : {CostKind::EMP_GLOBAL, CostKind::EMP_LOCAL, CostKind::HST, CostKind::EXP_ENTANGLED_G,
                       CostKind::EXP_PRODUCT_G, CostKind::EXP_PRODUCT_L_MC})
        if (to_string(k) == s) return k;
    throw InvalidArgument("unknown cost kind '" + s + "'");
}

inline constexpr double kCostAnomalyTol = 1e-9;

struct CostValue {
    double value = 0.0;
    CostKind kind = CostKind::EMP_GLOBAL;
    std::optional<double> stderr_mean;
    double raw = 0.0;
    bool anomaly = false;  // raw outside [0, 1] by more than kCostAnomalyTol
};

/// Clamps into [0, 1], keeping the raw value.
inline CostValue make_cost(double raw, CostKind kind, std::optional<double> stderr_mean = std::nullopt) {
    if (!std::isfinite(raw)) throw NumericFailure(to_string(kind) + ": non-finite cost");
    CostValue c;
    c.kind = kind;
    c.raw = raw;
    c.value = std::clamp(raw, 0.0, 1.0);
    c.anomaly = raw < -kCostAnomalyTol || raw > 1.0 + kCostAnomalyTol;
    c.stderr_mean = stderr_mean;
    return c;
}

inline nlohmann::json to_json(const CostValue& c) {
    nlohmann::json j{{"kind", to_string(c.kind)}, {"value", c.value}, {"raw", c.raw}, {"anomaly", c.anomaly}};
    j["stderr"] = c.stderr_mean ? nlohmann::json(*c.stderr_mean) : nlohmann::json(nullptr);
    return j;
}

// ---------------------------------------------------------------------------
// Per-state cost terms

namespace detail {

/// sum over the other qubits of |<psi_q| chi>|^2, i.e. <chi| (|psi><psi| on q) |chi>.
inline double local_projector_expectation(const CVector& chi, int n, int q, const Qubit& psi) {
    const std::size_t stride = std::size_t{1} << bit_position(n, q);
    const std::size_t d = static_cast<std::size_t>(chi.size());
    const cplx a0 = std::conj(psi[0]), a1 = std::conj(psi[1]);
    double acc = 0.0;
    for (std::size_t base = 0; base < d; base += 2 * stride)
        for (std::size_t i = base; i < base + stride; ++i)
            acc += std::norm(a0 * chi[static_cast<Eigen::Index>(i)] + a1 * chi[static_cast<Eigen::Index>(i + stride)]);
    return acc;
}

/// 1 - |<Psi|chi>|^2
inline double global_term(const CVector& chi, const CVector& psi) { return 1.0 - std::norm(psi.dot(chi)); }

/// 1 - (1/n) sum_q <chi| (|psi_q><psi_q| (x) 1) |chi>
inline double local_term(const CVector& chi, const std::vector<Qubit>& factors) {
    const int n = static_cast<int>(factors.size());
    double acc = 0.0;
    for (int q = 0; q < n; ++q) acc += local_projector_expectation(chi, n, q, factors[static_cast<std::size_t>(q)]);
    return 1.0 - acc / n;
}

/// Parameters of the split form W(theta_l) D(phi) W(theta_r)^dagger, phi being raw D angles.
struct SplitParams {
    std::span<const double> theta_l;
    std::span<const double> phi;
    std::span<const double> theta_r;
};

inline double pair_term(const VffAnsatz& a, const SplitParams& p, const TrainingPair& pair, CostKind kind) {
    CVector chi = pair.output.amplitudes();
    apply_vff_split_inplace(chi, a, p.theta_l, p.phi, 1.0, p.theta_r, true);
    if (kind == CostKind::EMP_GLOBAL) return global_term(chi, pair.input.amplitudes());
    if (!pair.factors) throw InvalidArgument("local cost requires datasets with single-qubit factors");
    return local_term(chi, pair.factors->factors);
}

/// Mean per-pair term, deterministic pairwise reduction.
inline double empirical_cost_raw(const VffAnsatz& a, const SplitParams& p, const Dataset& data, CostKind kind,
                                 bool parallel) {
    if (data.pairs.empty()) throw InvalidArgument("empirical cost: empty dataset");
    if (data.n != a.qubits()) throw InvalidArgument("empirical cost: dataset n does not match ansatz");
    if (kind != CostKind::EMP_GLOBAL && kind != CostKind::EMP_LOCAL)
        throw InvalidArgument("empirical cost: kind must be EMP_GLOBAL or EMP_LOCAL");
    std::vector<double> terms(data.pairs.size());
    auto body = [&](std::size_t j) { terms[j] = pair_term(a, p, data.pairs[j], kind); };
    if (parallel)
        parallel_for(terms.size(), body);
    else
        for (std::size_t j = 0; j < terms.size(); ++j) body(j);
    const double value = pairwise_sum(terms) / static_cast<double>(terms.size());
    if (!std::isfinite(value)) throw NumericFailure(to_string(kind) + ": non-finite cost");
    return value;
}

inline std::vector<double> scaled(std::span<const double> v, double s) {
    std::vector<double> out(v.begin(), v.end());
    for (auto& x : out) x *= s;
    return out;
}

}  // namespace detail

inline CostValue empirical_cost(const VffAnsatz& a, std::span<const double> theta, std::span<const double> gamma,
                                double t, const Dataset& data, CostKind kind) {
    a.check(theta, gamma);
    const auto phi = detail::scaled(gamma, a.time_scale(t));
    return make_cost(detail::empirical_cost_raw(a, {theta, phi, theta}, data, kind, true), kind);
}

/// (1/N) sum_j (1 - |<Phi_j| V_t |Psi_j>|^2)
inline CostValue cost_global_empirical(const VffAnsatz& a, std::span<const double> theta,
                                       std::span<const double> gamma, double t, const Dataset& data) {
    return empirical_cost(a, theta, gamma, t, data, CostKind::EMP_GLOBAL);
}

/// 1 - (1/nN) sum_j sum_i <chi_j| (|psi_i><psi_i| (x) 1) |chi_j>, chi_j = V_t^dagger |Phi_j>
inline CostValue cost_local_empirical(const VffAnsatz& a, std::span<const double> theta,
                                      std::span<const double> gamma, double t, const Dataset& data) {
    return empirical_cost(a, theta, gamma, t, data, CostKind::EMP_LOCAL);
}

// ---------------------------------------------------------------------------
// Exact expected costs

namespace detail {
inline void check_pair(const DenseOperator& u, const DenseOperator& v, const char* what) {
    if (u.qubits() != v.qubits()) throw InvalidArgument(std::string(what) + ": dimension mismatch");
    require_dense(u.qubits(), what);
}
}  // namespace detail

inline double hst_raw(const CMatrix& u, const CMatrix& v) {
    const double d = static_cast<double>(u.rows());
    const cplx tr = (u.adjoint() * v).trace();
    return 1.0 - std::norm(tr) / (d * d);
}

/// 1 - |Tr(u^dagger v)|^2 / d^2
inline CostValue cost_hst(const DenseOperator& u, const DenseOperator& v) {
    detail::check_pair(u, v, "cost_hst");
    return make_cost(hst_raw(u.matrix(), v.matrix()), CostKind::HST);
}

/// Expected global cost over Haar-random n-qubit inputs: d/(d+1) C_HST.
inline CostValue expected_entangled_global(const DenseOperator& u, const DenseOperator& v) {
    detail::check_pair(u, v, "expected_entangled_global");
    const double d = static_cast<double>(u.dim());
    return make_cost(d / (d + 1) * hst_raw(u.matrix(), v.matrix()), CostKind::EXP_ENTANGLED_G);
}

/// Haar-averaged fidelity |<psi|u^dagger v|psi>|^2: 1 - d/(d+1) C_HST.
inline double average_fidelity(const DenseOperator& u, const DenseOperator& v) {
    return 1.0 - expected_entangled_global(u, v).value;
}

/// 1 - 6^{-n} sum_A ||Tr_{A^c}(W)||_F^2 with W = u^dagger v. Subsets are visited
/// in Gray-code order, each partial trace computed from scratch: O(2^n 4^n).
inline CostValue expected_product_global(const DenseOperator& u, const DenseOperator& v) {
    detail::check_pair(u, v, "expected_product_global");
    const int n = u.qubits();
    if (n > caps().subset_qubits)
        throw CapExceeded("expected_product_global: n=" + std::to_string(n) + " exceeds subset cap " +
                          std::to_string(caps().subset_qubits));
    const DenseOperator w(n, u.matrix().adjoint() * v.matrix());
    const std::size_t subsets = std::size_t{1} << n;
    std::vector<double> terms(subsets);
    for (std::size_t i = 0; i < subsets; ++i) {
        const std::size_t gray = i ^ (i >> 1);
        std::vector<int> keep;
        for (int q = 0; q < n; ++q)
            if (gray & (std::size_t{1} << q)) keep.push_back(q);
        terms[i] = partial_trace(w, keep).matrix().squaredNorm();
    }
    const double avg = pairwise_sum(terms) / std::pow(6.0, n);
    return make_cost(1.0 - avg, CostKind::EXP_PRODUCT_G);
}

/// Monte-Carlo estimate of the expected local cost over products of
/// single-qubit Haar states; sample k uses derive_seed(seed, k).
inline CostValue expected_product_local_mc(const DenseOperator& u, const DenseOperator& v, std::size_t samples,
                                           RngSeed seed) {
    detail::check_pair(u, v, "expected_product_local_mc");
    detail::require(samples >= 100, "expected_product_local_mc: samples must be >= 100");
    const int n = u.qubits();
    const CMatrix wdag = v.matrix().adjoint() * u.matrix();
    std::vector<double> terms(samples);
    parallel_for(samples, [&](std::size_t k) {
        CounterRng rng(derive_seed(seed, k));
        const ProductStateSpec spec = sample_product_state(n, DataSource::HAAR1, rng);
        const CVector chi = wdag * spec.assemble().amplitudes();
        terms[k] = detail::local_term(chi, spec.factors);
    });
    const double mean = pairwise_sum(terms) / static_cast<double>(samples);
    std::vector<double> sq(samples);
    for (std::size_t k = 0; k < samples; ++k) sq[k] = (terms[k] - mean) * (terms[k] - mean);
    const double var = pairwise_sum(sq) / static_cast<double>(samples - 1);
    return make_cost(mean, CostKind::EXP_PRODUCT_L_MC, std::sqrt(var / static_cast<double>(samples)));
}

/// Expected product-global cost of W_1^{(x)n} given C_HST of W_1^{(x)n}.
inline double tensor_power_cost_relation(double c_hst, int n) {
    if (!(c_hst >= 0.0 && c_hst <= 1.0)) throw InvalidArgument("tensor_power_cost_relation: c_hst must be in [0,1]");
    detail::require(n >= 1, "tensor_power_cost_relation: n must be >= 1");
    return 1.0 - std::pow(2.0 + 4.0 * std::pow(1.0 - c_hst, 1.0 / n), n) / std::pow(6.0, n);
}

}  // namespace reff
