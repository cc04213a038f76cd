#pragma once

// Parameterized circuits and the diagonalizing ansatz V_t = W(theta) D(t gamma) W(theta)^dagger.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "reff/hamiltonians.hpp"
#include "reff/qsim.hpp"

namespace reff {

enum class GateKind { RZ, RZZ, GIVENS, SYM, FIXED };

inline std::string to_string(GateKind k) {
    switch (k) {
        case GateKind::RZ: return "RZ";
        case GateKind::RZZ: return "RZZ";
        case GateKind::GIVENS: return "GIVENS";
        case GateKind::SYM: return "SYM";
        case GateKind::FIXED: return "FIXED";
    }
    return "?";
}

inline GateKind gate_kind_from_string(const std::string& s) {
    for (GateKind k : {GateKind::RZ, GateKind::RZZ, GateKind::GIVENS, GateKind::SYM, GateKind::FIXED})
        if (to_string(k) == s) return k;
    throw InvalidArgument("unknown gate kind '" + s + "'");
}

constexpr int slot_arity(GateKind k) {
    switch (k) {
        case GateKind::RZ:
        case GateKind::RZZ:
        case GateKind::GIVENS: return 1;
        case GateKind::SYM: return 4;
        case GateKind::FIXED: return 0;
    }
    return 0;
}

constexpr int target_arity(GateKind k) { return k == GateKind::RZ ? 1 : 2; }

// ---------------------------------------------------------------------------
// Gate matrices

namespace detail {

inline CMatrix rz(double t) {
    CMatrix m = CMatrix::Zero(2, 2);
    m(0, 0) = std::polar(1.0, -t / 2);
    m(1, 1) = std::polar(1.0, t / 2);
    return m;
}

inline CMatrix rzz(double t) {
    CMatrix m = CMatrix::Zero(4, 4);
    const cplx a = std::polar(1.0, -t / 2), b = std::polar(1.0, t / 2);
    m(0, 0) = a;
    m(1, 1) = b;
    m(2, 2) = b;
    m(3, 3) = a;
    return m;
}

inline CMatrix sym(double t1, double t2, double t3, double t4) {
    CMatrix m = CMatrix::Zero(4, 4);
    const double c = std::cos(t2), s = std::sin(t2);
    m(0, 0) = std::polar(1.0, t1);
    m(1, 1) = c;
    m(1, 2) = -std::polar(1.0, t3) * s;
    m(2, 1) = std::polar(1.0, t4) * s;
    m(2, 2) = std::polar(1.0, t3 + t4) * c;
    m(3, 3) = 1.0;
    return m;
}

inline CMatrix givens(double t) { return sym(0.0, t, 0.0, 0.0); }

}  // namespace detail

/// exp(-i t Z / 2)
inline DenseOperator rz_matrix(double t) { return DenseOperator(1, detail::rz(t)); }

/// exp(-i t Z(x)Z / 2)
inline DenseOperator rzz_matrix(double t) { return DenseOperator(2, detail::rzz(t)); }

/// Identity on |00>, |11>; [[cos t, -sin t], [sin t, cos t]] on (|01>, |10>).
inline DenseOperator givens_matrix(double t) { return DenseOperator(2, detail::givens(t)); }

/// General number-conserving two-qubit gate.
inline DenseOperator sym_matrix(double t1, double t2, double t3, double t4) {
    return DenseOperator(2, detail::sym(t1, t2, t3, t4));
}

// ---------------------------------------------------------------------------

struct GateSpec {
    GateKind kind = GateKind::RZ;
    std::vector<int> targets;
    std::vector<int> slots;
    CMatrix fixed;  // FIXED only

    bool is_diagonal() const {
        if (kind == GateKind::RZ || kind == GateKind::RZZ) return true;
        if (kind != GateKind::FIXED) return false;
        CMatrix off = fixed;
        off.diagonal().setZero();
        return off.size() == 0 || off.cwiseAbs().maxCoeff() <= 1e-12;
    }

    bool is_parameterized() const { return !slots.empty(); }
};

/// Slot frequency content decides the shift rule. Single: generator spectrum
/// with one gap (two-term +-pi/2 rule exact). Double: gaps {1, 2}.
enum class SlotSpectrum { Single, Double };

class ParamCircuit {
public:
    ParamCircuit() = default;
    explicit ParamCircuit(int n) : n_(n) { detail::require(n >= 1, "ParamCircuit: n must be >= 1"); }

    /// Appends a parameterized gate, allocating fresh consecutive slots.
    void add(GateKind kind, std::vector<int> targets) {
        detail::require(kind != GateKind::FIXED, "ParamCircuit::add: use add_fixed for FIXED gates");
        std::vector<int> slots(static_cast<std::size_t>(slot_arity(kind)));
        for (auto& s : slots) s = param_count_++;
        push(GateSpec{kind, std::move(targets), std::move(slots), {}});
    }

    void add_fixed(CMatrix matrix, std::vector<int> targets) {
        if (matrix.rows() != matrix.cols() || static_cast<std::size_t>(matrix.rows()) != (std::size_t{1} << targets.size()))
            throw InvalidArgument("add_fixed: matrix size does not match targets");
        if (!DenseOperator(static_cast<int>(targets.size()), matrix).is_unitary())
            throw InvalidArgument("add_fixed: matrix is not unitary");
        push(GateSpec{GateKind::FIXED, std::move(targets), {}, std::move(matrix)});
    }

    /// Appends a gate with explicit slots (deserialization). Call validate() afterwards.
    void add_raw(GateSpec g) {
        for (int s : g.slots) param_count_ = std::max(param_count_, s + 1);
        push(std::move(g));
    }

    int qubits() const { return n_; }
    const std::vector<GateSpec>& gates() const { return gates_; }
    int param_count() const { return param_count_; }

    /// Checks slot arity, target ranges, and that every slot is used exactly once.
    void validate() const {
        std::vector<int> uses(static_cast<std::size_t>(param_count_), 0);
        for (const auto& g : gates_) {
            if (static_cast<int>(g.slots.size()) != slot_arity(g.kind))
                throw InvalidArgument("ParamCircuit: slot arity mismatch for " + to_string(g.kind));
            if (g.kind != GateKind::FIXED && static_cast<int>(g.targets.size()) != target_arity(g.kind))
                throw InvalidArgument("ParamCircuit: target arity mismatch for " + to_string(g.kind));
            detail::check_targets(n_, g.targets);
            for (int s : g.slots) {
                if (s < 0 || s >= param_count_) throw InvalidArgument("ParamCircuit: slot out of range");
                ++uses[static_cast<std::size_t>(s)];
            }
        }
        for (int u : uses)
            if (u != 1) throw InvalidArgument("ParamCircuit: every slot must be used by exactly one gate");
    }

    bool all_diagonal() const {
        return std::all_of(gates_.begin(), gates_.end(), [](const GateSpec& g) { return g.is_diagonal(); });
    }

    /// Gate index and position within the gate for each slot.
    std::pair<std::size_t, int> locate(int slot) const {
        for (std::size_t i = 0; i < gates_.size(); ++i)
            for (std::size_t k = 0; k < gates_[i].slots.size(); ++k)
                if (gates_[i].slots[k] == slot) return {i, static_cast<int>(k)};
        throw InvalidArgument("ParamCircuit::locate: slot " + std::to_string(slot) + " not found");
    }

    SlotSpectrum spectrum(int slot) const {
        const auto [gi, pos] = locate(slot);
        const GateKind k = gates_[gi].kind;
        if (k == GateKind::GIVENS || (k == GateKind::SYM && pos == 1)) return SlotSpectrum::Double;
        return SlotSpectrum::Single;
    }

private:
    void push(GateSpec g) {
        detail::check_targets(n_, g.targets);
        if (g.kind != GateKind::FIXED && static_cast<int>(g.targets.size()) != target_arity(g.kind))
            throw InvalidArgument("ParamCircuit: " + to_string(g.kind) + " expects " +
                                  std::to_string(target_arity(g.kind)) + " targets");
        gates_.push_back(std::move(g));
    }

    int n_ = 1;
    std::vector<GateSpec> gates_;
    int param_count_ = 0;
};

/// Gate matrix with each slot angle multiplied by `scale`.
inline CMatrix gate_matrix(const GateSpec& g, std::span<const double> params, double scale = 1.0) {
    auto p = [&](int k) { return scale * params[static_cast<std::size_t>(g.slots[static_cast<std::size_t>(k)])]; };
    switch (g.kind) {
        case GateKind::RZ: return detail::rz(p(0));
        case GateKind::RZZ: return detail::rzz(p(0));
        case GateKind::GIVENS: return detail::givens(p(0));
        case GateKind::SYM: return detail::sym(p(0), p(1), p(2), p(3));
        case GateKind::FIXED: return g.fixed;
    }
    return {};
}

namespace detail {

inline void check_params(const ParamCircuit& c, std::span<const double> params, const char* what) {
    if (static_cast<int>(params.size()) != c.param_count())
        throw InvalidArgument(std::string(what) + ": expected " + std::to_string(c.param_count()) +
                              " parameters, got " + std::to_string(params.size()));
}

inline void apply_gate_spec(CVector& psi, int n, const GateSpec& g, std::span<const double> params, double scale,
                            bool adjoint) {
    if (g.kind == GateKind::RZ || g.kind == GateKind::RZZ) {
        const double t = (adjoint ? -scale : scale) * params[static_cast<std::size_t>(g.slots[0])];
        const cplx a = std::polar(1.0, -t / 2), b = std::polar(1.0, t / 2);
        if (g.kind == GateKind::RZ) {
            const std::array<cplx, 2> diag{a, b};
            apply_diagonal_inplace(psi, n, diag, g.targets);
        } else {
            const std::array<cplx, 4> diag{a, b, b, a};
            apply_diagonal_inplace(psi, n, diag, g.targets);
        }
        return;
    }
    const CMatrix m = gate_matrix(g, params, scale);
    if (adjoint)
        apply_matrix_inplace(psi, n, m.adjoint(), g.targets);
    else
        apply_matrix_inplace(psi, n, m, g.targets);
}

}  // namespace detail

/// psi <- C(params) psi, or C(params)^dagger psi when `adjoint` (gates reversed
/// and conjugate-transposed). Angles are multiplied by `scale`.
inline void apply_circuit_inplace(CVector& psi, const ParamCircuit& c, std::span<const double> params,
                                  bool adjoint = false, double scale = 1.0) {
    const int n = c.qubits();
    const auto& gates = c.gates();
    if (!adjoint) {
        for (const auto& g : gates) detail::apply_gate_spec(psi, n, g, params, scale, false);
    } else {
        for (auto it = gates.rbegin(); it != gates.rend(); ++it) detail::apply_gate_spec(psi, n, *it, params, scale, true);
    }
}

inline DenseOperator circuit_unitary(const ParamCircuit& c, std::span<const double> params, double scale = 1.0) {
    detail::check_params(c, params, "circuit_unitary");
    const int n = c.qubits();
    require_dense(n, "circuit_unitary");
    const auto d = static_cast<Eigen::Index>(dim_of(n));
    CMatrix u(d, d);
    CVector col(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        col.setZero();
        col[j] = 1.0;
        apply_circuit_inplace(col, c, params, false, scale);
        u.col(j) = col;
    }
    return DenseOperator(n, std::move(u));
}

/// Phases of a diagonal circuit: D = diag(result).
inline CVector diagonal_phases(const ParamCircuit& c, std::span<const double> params, double scale = 1.0) {
    detail::require(c.all_diagonal(), "diagonal_phases: circuit has non-diagonal gates");
    detail::check_params(c, params, "diagonal_phases");
    CVector ph = CVector::Ones(static_cast<Eigen::Index>(dim_of(c.qubits())));
    apply_circuit_inplace(ph, c, params, false, scale);
    return ph;
}

// ---------------------------------------------------------------------------
// Builders

/// Each layer: gates on (0,1),(2,3),... then on (1,2),(3,4),...
inline ParamCircuit build_brickwork(int n, int layers, GateKind kind) {
    detail::require(n >= 2, "build_brickwork: n must be >= 2");
    detail::require(layers >= 1, "build_brickwork: layers must be >= 1");
    detail::require(kind == GateKind::GIVENS || kind == GateKind::SYM, "build_brickwork: kind must be GIVENS or SYM");
    ParamCircuit c(n);
    for (int l = 0; l < layers; ++l) {
        for (int q = 0; q + 1 < n; q += 2) c.add(kind, {q, q + 1});
        for (int q = 1; q + 1 < n; q += 2) c.add(kind, {q, q + 1});
    }
    return c;
}

inline int default_layers(int n) { return (3 * n + 1) / 2; }

/// XY: RZ on each qubit. HEISENBERG: RZ on each qubit, then RZZ on every pair.
inline ParamCircuit build_diagonal(int n, Model model) {
    detail::require(n >= 1, "build_diagonal: n must be >= 1");
    ParamCircuit c(n);
    for (int q = 0; q < n; ++q) c.add(GateKind::RZ, {q});
    if (model == Model::Heisenberg)
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b) c.add(GateKind::RZZ, {a, b});
    else if (model != Model::XY)
        throw InvalidArgument("build_diagonal: model must be XY or HEISENBERG");
    return c;
}

struct CircuitStats {
    int parameterized_gates = 0;
    int two_qubit_gates = 0;
    int depth = 0;
    int parameters = 0;

    bool operator==(const CircuitStats&) const = default;
};

/// Depth is the ASAP layer count over all gates.
inline CircuitStats circuit_stats(const ParamCircuit& c) {
    CircuitStats s;
    s.parameters = c.param_count();
    std::vector<int> level(static_cast<std::size_t>(c.qubits()), 0);
    for (const auto& g : c.gates()) {
        if (g.is_parameterized()) ++s.parameterized_gates;
        if (g.targets.size() == 2) ++s.two_qubit_gates;
        int start = 0;
        for (int q : g.targets) start = std::max(start, level[static_cast<std::size_t>(q)]);
        for (int q : g.targets) level[static_cast<std::size_t>(q)] = start + 1;
        s.depth = std::max(s.depth, start + 1);
    }
    return s;
}

// ---------------------------------------------------------------------------
// VFF ansatz

struct VffAnsatz {
    ParamCircuit w;
    ParamCircuit d;
    double dt = 0.1;

    VffAnsatz() = default;
    VffAnsatz(ParamCircuit w_, ParamCircuit d_, double dt_) : w(std::move(w_)), d(std::move(d_)), dt(dt_) {
        validate();
    }

    void validate() const {
        if (w.qubits() != d.qubits()) throw InvalidArgument("VffAnsatz: W and D act on different qubit counts");
        if (!d.all_diagonal()) throw InvalidArgument("VffAnsatz: D must be diagonal");
        if (!(dt > 0) || !std::isfinite(dt)) throw InvalidArgument("VffAnsatz: dt must be positive");
        w.validate();
        d.validate();
    }

    int qubits() const { return w.qubits(); }
    int theta_count() const { return w.param_count(); }
    int gamma_count() const { return d.param_count(); }

    /// t / dt: factor applied to the stored per-step angles.
    double time_scale(double t) const { return t / dt; }

    void check(std::span<const double> theta, std::span<const double> gamma) const {
        detail::check_params(w, theta, "VffAnsatz theta");
        detail::check_params(d, gamma, "VffAnsatz gamma");
    }
};

inline VffAnsatz make_ansatz(Model model, int n, int layers, GateKind kind, double dt) {
    return VffAnsatz(build_brickwork(n, layers, kind), build_diagonal(n, model), dt);
}

/// psi <- W(theta_l) D(scale gamma) W(theta_r)^dagger psi; `adjoint` applies the inverse.
inline void apply_vff_split_inplace(CVector& psi, const VffAnsatz& a, std::span<const double> theta_l,
                                    std::span<const double> gamma, double scale, std::span<const double> theta_r,
                                    bool adjoint = false) {
    if (!adjoint) {
        apply_circuit_inplace(psi, a.w, theta_r, true);
        apply_circuit_inplace(psi, a.d, gamma, false, scale);
        apply_circuit_inplace(psi, a.w, theta_l, false);
    } else {
        apply_circuit_inplace(psi, a.w, theta_l, true);
        apply_circuit_inplace(psi, a.d, gamma, true, scale);
        apply_circuit_inplace(psi, a.w, theta_r, false);
    }
}

inline void apply_vff_inplace(CVector& psi, const VffAnsatz& a, std::span<const double> theta,
                              std::span<const double> gamma, double t, bool adjoint = false) {
    apply_vff_split_inplace(psi, a, theta, gamma, a.time_scale(t), theta, adjoint);
}

inline StateVector apply_vff(const VffAnsatz& a, std::span<const double> theta, std::span<const double> gamma,
                             double t, const StateVector& state) {
    a.check(theta, gamma);
    if (state.qubits() != a.qubits()) throw InvalidArgument("apply_vff: qubit count mismatch");
    require_state(a.qubits(), "apply_vff");
    CVector psi = state.amplitudes();
    apply_vff_inplace(psi, a, theta, gamma, t);
    return StateVector(a.qubits(), std::move(psi), 1e-10);
}

/// W(theta) D(t gamma) W(theta)^dagger as a dense matrix.
inline DenseOperator vff_unitary(const VffAnsatz& a, std::span<const double> theta, std::span<const double> gamma,
                                 double t) {
    a.check(theta, gamma);
    require_dense(a.qubits(), "vff_unitary");
    const CMatrix w = circuit_unitary(a.w, theta).matrix();
    const CVector ph = diagonal_phases(a.d, gamma, a.time_scale(t));
    return DenseOperator(a.qubits(), w * ph.asDiagonal() * w.adjoint());
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const ParamCircuit& c) {
    nlohmann::json gates = nlohmann::json::array();
    for (const auto& g : c.gates()) {
        nlohmann::json jg{{"kind", to_string(g.kind)}, {"targets", g.targets}, {"slots", g.slots}};
        if (g.kind == GateKind::FIXED) {
            nlohmann::json rows = nlohmann::json::array();
            for (Eigen::Index r = 0; r < g.fixed.rows(); ++r) {
                nlohmann::json row = nlohmann::json::array();
                for (Eigen::Index k = 0; k < g.fixed.cols(); ++k) row.push_back({g.fixed(r, k).real(), g.fixed(r, k).imag()});
                rows.push_back(row);
            }
            jg["matrix"] = rows;
        }
        gates.push_back(jg);
    }
    return {{"n", c.qubits()}, {"param_count", c.param_count()}, {"gates", gates}};
}

inline ParamCircuit circuit_from_json(const nlohmann::json& j) {
    try {
        ParamCircuit c(j.at("n").get<int>());
        for (const auto& jg : j.at("gates")) {
            GateSpec g;
            g.kind = gate_kind_from_string(jg.at("kind").get<std::string>());
            g.targets = jg.at("targets").get<std::vector<int>>();
            g.slots = jg.at("slots").get<std::vector<int>>();
            if (g.kind == GateKind::FIXED) {
                const auto& rows = jg.at("matrix");
                const auto dim = static_cast<Eigen::Index>(rows.size());
                g.fixed.resize(dim, dim);
                for (Eigen::Index r = 0; r < dim; ++r)
                    for (Eigen::Index k = 0; k < dim; ++k) {
                        const auto& e = rows.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(k));
                        g.fixed(r, k) = cplx(e.at(0).get<double>(), e.at(1).get<double>());
                    }
            }
            c.add_raw(std::move(g));
        }
        if (j.at("param_count").get<int>() != c.param_count()) throw InvalidArgument("param_count mismatch");
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("circuit: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("circuit: ") + e.what());
    }
}

inline constexpr int kParamsFormatVersion = 1;

/// Trained VFF parameters together with the circuits they belong to.
struct ParamFile {
    VffAnsatz ansatz;
    std::vector<double> theta;
    std::vector<double> gamma;
};

inline nlohmann::json to_json(const ParamFile& p) {
    p.ansatz.check(p.theta, p.gamma);
    return {{"format_version", kParamsFormatVersion},
            {"n", p.ansatz.qubits()},
            {"dt", p.ansatz.dt},
            {"w", to_json(p.ansatz.w)},
            {"d", to_json(p.ansatz.d)},
            {"theta", p.theta},
            {"gamma", p.gamma}};
}

inline ParamFile params_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format_version").get<int>() != kParamsFormatVersion)
            throw FormatError("params: unsupported format_version");
        ParamFile p{VffAnsatz(circuit_from_json(j.at("w")), circuit_from_json(j.at("d")), j.at("dt").get<double>()),
                    j.at("theta").get<std::vector<double>>(), j.at("gamma").get<std::vector<double>>()};
        if (p.ansatz.qubits() != j.at("n").get<int>()) throw FormatError("params: n does not match circuits");
        p.ansatz.check(p.theta, p.gamma);
        for (double x : p.theta)
            if (!std::isfinite(x)) throw FormatError("params: non-finite theta");
        for (double x : p.gamma)
            if (!std::isfinite(x)) throw FormatError("params: non-finite gamma");
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("params: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("params: ") + e.what());
    }
}

}  // namespace reff
