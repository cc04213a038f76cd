#pragma once

// Pauli-sum Hamiltonians, exact evolution and Suzuki-Trotter products.

#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"
#include "reff/qsim.hpp"

namespace reff {

enum class Model { XY, Heisenberg, Custom };

inline std::string to_string(Model m) {
    switch (m) {
        case Model::XY: return "XY";
        case Model::Heisenberg: return "HEISENBERG";
        case Model::Custom: return "CUSTOM";
    }
    return "?";
}

inline Model model_from_string(const std::string& s) {
    if (s == "XY") return Model::XY;
    if (s == "HEISENBERG") return Model::Heisenberg;
    if (s == "CUSTOM") return Model::Custom;
    throw InvalidArgument("unknown model '" + s + "'");
}

struct PauliTerm {
    double coefficient = 0.0;
    PauliString pauli;
};

class PauliSumHamiltonian {
public:
    PauliSumHamiltonian() = default;
    explicit PauliSumHamiltonian(int n, Model model = Model::Custom, bool periodic = false)
        : n_(n), model_(model), periodic_(periodic) {
        detail::require(n >= 1, "PauliSumHamiltonian: n must be >= 1");
    }

    /// Appends c*P. Zero coefficients are dropped.
    void add_term(double coefficient, PauliString pauli) {
        if (pauli.qubits() != n_) throw InvalidArgument("add_term: Pauli string length does not match n");
        if (!std::isfinite(coefficient)) throw InvalidArgument("add_term: non-finite coefficient");
        if (coefficient == 0.0) return;
        terms_.push_back({coefficient, std::move(pauli)});
    }

    int qubits() const { return n_; }
    Model model() const { return model_; }
    bool periodic() const { return periodic_; }
    const std::vector<PauliTerm>& terms() const { return terms_; }

    DenseOperator dense() const {
        require_dense(n_, "PauliSumHamiltonian::dense");
        const auto d = static_cast<Eigen::Index>(dim_of(n_));
        CMatrix m = CMatrix::Zero(d, d);
        for (const auto& t : terms_) m += t.coefficient * t.pauli.dense().matrix();
        return DenseOperator(n_, std::move(m));
    }

    /// out = H in
    CVector apply(const CVector& in) const {
        CVector out = CVector::Zero(in.size());
        CVector tmp(in.size());
        for (const auto& t : terms_) {
            t.pauli.apply(in, tmp);
            out += t.coefficient * tmp;
        }
        return out;
    }

private:
    int n_ = 1;
    Model model_ = Model::Custom;
    bool periodic_ = false;
    std::vector<PauliTerm> terms_;
};

namespace detail {

inline std::vector<std::pair<int, int>> chain_bonds(int n, bool periodic) {
    std::vector<std::pair<int, int>> bonds;
    for (int i = 0; i + 1 < n; ++i) bonds.emplace_back(i, i + 1);
    if (periodic) bonds.emplace_back(n - 1, 0);
    return bonds;
}

}  // namespace detail

/// sum_i X_i X_{i+1} + Y_i Y_{i+1}, bond by bond with XX before YY.
inline PauliSumHamiltonian build_xy_chain(int n, bool periodic) {
    detail::require(n >= 2, "build_xy_chain: n must be >= 2");
    PauliSumHamiltonian h(n, Model::XY, periodic);
    for (auto [a, b] : detail::chain_bonds(n, periodic)) {
        h.add_term(1.0, PauliString::on(n, {{a, Pauli::X}, {b, Pauli::X}}));
        h.add_term(1.0, PauliString::on(n, {{a, Pauli::Y}, {b, Pauli::Y}}));
    }
    return h;
}

/// sum_i S_i . S_{i+1} with S = sigma/2.
inline PauliSumHamiltonian build_heisenberg_chain(int n, bool periodic) {
    detail::require(n >= 2, "build_heisenberg_chain: n must be >= 2");
    PauliSumHamiltonian h(n, Model::Heisenberg, periodic);
    for (auto [a, b] : detail::chain_bonds(n, periodic))
        for (Pauli p : {Pauli::X, Pauli::Y, Pauli::Z}) h.add_term(0.25, PauliString::on(n, {{a, p}, {b, p}}));
    return h;
}

inline PauliSumHamiltonian build_model(Model model, int n, bool periodic) {
    switch (model) {
        case Model::XY: return build_xy_chain(n, periodic);
        case Model::Heisenberg: return build_heisenberg_chain(n, periodic);
        case Model::Custom: break;
    }
    throw InvalidArgument("build_model: no builder for custom models");
}

// ---------------------------------------------------------------------------

struct TrotterConfig {
    int order = 2;
    int trotter_number = 1;
    double dt = 0.1;

    void validate() const {
        if (order != 1 && order != 2) throw InvalidArgument("TrotterConfig: order must be 1 or 2");
        if (trotter_number < 1) throw InvalidArgument("TrotterConfig: trotter_number must be >= 1");
        if (!std::isfinite(dt)) throw InvalidArgument("TrotterConfig: dt must be finite");
    }

    bool operator==(const TrotterConfig&) const = default;
};

namespace detail {

/// psi <- exp(-i alpha P) psi = cos(alpha) psi - i sin(alpha) P psi.
inline void apply_pauli_rotation(CVector& psi, const PauliString& p, double alpha) {
    const double c = std::cos(alpha), s = std::sin(alpha);
    const std::uint64_t xm = p.x_mask(), zm = p.z_mask();
    const int yc = p.y_count();
    const auto d = static_cast<std::uint64_t>(psi.size());
    const cplx mis(0.0, -s);
    if (xm == 0) {
        for (std::uint64_t b = 0; b < d; ++b)
            psi[static_cast<Eigen::Index>(b)] *= c + mis * PauliString::phase_from(b, zm, yc);
        return;
    }
    for (std::uint64_t b = 0; b < d; ++b) {
        const std::uint64_t f = b ^ xm;
        if (f < b) continue;
        const auto ib = static_cast<Eigen::Index>(b), jf = static_cast<Eigen::Index>(f);
        const cplx a = psi[ib], e = psi[jf];
        psi[ib] = c * a + mis * PauliString::phase_from(f, zm, yc) * e;
        psi[jf] = c * e + mis * PauliString::phase_from(b, zm, yc) * a;
    }
}

}  // namespace detail

/// Applies the Trotter product for step cfg.dt to psi in place.
inline void apply_trotter_inplace(CVector& psi, const PauliSumHamiltonian& h, const TrotterConfig& cfg) {
    cfg.validate();
    const double tau = cfg.dt / cfg.trotter_number;
    const auto& terms = h.terms();
    for (int rep = 0; rep < cfg.trotter_number; ++rep) {
        if (cfg.order == 1) {
            for (const auto& t : terms) detail::apply_pauli_rotation(psi, t.pauli, t.coefficient * tau);
        } else {
            for (const auto& t : terms) detail::apply_pauli_rotation(psi, t.pauli, 0.5 * t.coefficient * tau);
            for (auto it = terms.rbegin(); it != terms.rend(); ++it)
                detail::apply_pauli_rotation(psi, it->pauli, 0.5 * it->coefficient * tau);
        }
    }
}

inline StateVector apply_trotter(const StateVector& state, const PauliSumHamiltonian& h, const TrotterConfig& cfg) {
    if (state.qubits() != h.qubits()) throw InvalidArgument("apply_trotter: qubit count mismatch");
    require_state(state.qubits(), "apply_trotter");
    CVector psi = state.amplitudes();
    apply_trotter_inplace(psi, h, cfg);
    return StateVector(state.qubits(), std::move(psi), 1e-10);
}

inline DenseOperator trotter_unitary(const PauliSumHamiltonian& h, const TrotterConfig& cfg) {
    cfg.validate();
    const int n = h.qubits();
    require_dense(n, "trotter_unitary");
    const auto d = static_cast<Eigen::Index>(dim_of(n));
    CMatrix u(d, d);
    CVector col(d);
    for (Eigen::Index c = 0; c < d; ++c) {
        col.setZero();
        col[c] = 1.0;
        apply_trotter_inplace(col, h, cfg);
        u.col(c) = col;
    }
    return DenseOperator(n, std::move(u));
}

/// exp(-i H t)
inline DenseOperator exact_unitary(const PauliSumHamiltonian& h, double t) {
    require_dense(h.qubits(), "exact_unitary");
    return hermitian_exp(h.dense(), t);
}

/// || trotter_unitary - exp(-i H dt) ||_2
inline double trotter_error(const PauliSumHamiltonian& h, const TrotterConfig& cfg) {
    return schatten_norm(trotter_unitary(h, cfg).matrix() - exact_unitary(h, cfg.dt).matrix(), SchattenP::Two);
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const PauliSumHamiltonian& h) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : h.terms()) terms.push_back({{"coefficient", t.coefficient}, {"pauli", t.pauli.str()}});
    return {{"n", h.qubits()}, {"periodic", h.periodic()}, {"model", to_string(h.model())}, {"terms", terms}};
}

inline PauliSumHamiltonian hamiltonian_from_json(const nlohmann::json& j) {
    try {
        PauliSumHamiltonian h(j.at("n").get<int>(), model_from_string(j.at("model").get<std::string>()),
                              j.at("periodic").get<bool>());
        for (const auto& t : j.at("terms"))
            h.add_term(t.at("coefficient").get<double>(), PauliString::from_string(t.at("pauli").get<std::string>()));
        return h;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("hamiltonian: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("hamiltonian: ") + e.what());
    }
}

inline nlohmann::json to_json(const TrotterConfig& c) {
    return {{"order", c.order}, {"r", c.trotter_number}, {"dt", c.dt}};
}

inline TrotterConfig trotter_from_json(const nlohmann::json& j) {
    try {
        TrotterConfig c{j.at("order").get<int>(), j.at("r").get<int>(), j.at("dt").get<double>()};
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("trotter config: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("trotter config: ") + e.what());
    }
}

}  // namespace reff
