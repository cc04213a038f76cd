#pragma once

// Fast-forwarding experiments: average-fidelity time series against the
// Trotterized and exact evolutions, and Pauli-basis state decomposition.

#include <Eigen/Eigenvalues>

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reff/ansatz.hpp"
#include "reff/costs.hpp"
#include "reff/hamiltonians.hpp"
#include "reff/parallel.hpp"
#include "reff/qsim.hpp"

namespace reff {

enum class Reference { TROTTER, EXACT, BOTH };

inline std::string to_string(Reference r) {
    switch (r) {
        case Reference::TROTTER: return "TROTTER";
        case Reference::EXACT: return "EXACT";
        case Reference::BOTH: return "BOTH";
    }
    return "?";
}

inline Reference reference_from_string(const std::string& s) {
    if (s == "TROTTER") return Reference::TROTTER;
    if (s == "EXACT") return Reference::EXACT;
    if (s == "BOTH") return Reference::BOTH;
    throw InvalidArgument("unknown reference '" + s + "'");
}

struct FastForwardPlan {
    double dt = 0.1;
    int M_max = 100;
    int stride = 1;                  // integer points M = 0, stride, 2 stride, ..., M_max
    int fractional_resolution = 1;   // sub-steps per dt; 1 means integer points only
    int fractional_M_max = 0;        // fractional points are added for M < fractional_M_max
    Reference reference = Reference::BOTH;
    std::size_t mc_samples = 200;    // Haar samples when n exceeds the dense cap
    RngSeed mc_seed{7};

    void validate() const {
        detail::require(M_max >= 1, "FastForwardPlan: M_max must be >= 1");
        detail::require(stride >= 1, "FastForwardPlan: stride must be >= 1");
        detail::require(fractional_resolution >= 1, "FastForwardPlan: fractional_resolution must be >= 1");
        detail::require(dt > 0, "FastForwardPlan: dt must be > 0");
        detail::require(fractional_M_max >= 0 && fractional_M_max <= M_max, "FastForwardPlan: bad fractional_M_max");
    }
};

struct SeriesPoint {
    double t = 0.0;
    double M = 0.0;  // t / dt, non-integer at fractional points
    std::optional<double> fid_vs_trotter;
    std::optional<double> fid_vs_exact;
    std::optional<double> stderr_mean;  // Monte-Carlo points only
};

/// Unwrapped phase angles mu_b of a diagonal circuit: D = diag(exp(i mu_b)).
/// Scaling every angle by s scales mu by s.
inline Eigen::VectorXd diagonal_angles(const ParamCircuit& c, std::span<const double> params) {
    detail::require(c.all_diagonal(), "diagonal_angles: circuit has non-diagonal gates");
    const int n = c.qubits();
    const auto d = dim_of(n);
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    for (const auto& g : c.gates()) {
        for (std::size_t b = 0; b < d; ++b) {
            int parity = 0;
            std::size_t sub = 0;
            for (int q : g.targets) {
                const int bit = static_cast<int>((b >> bit_position(n, q)) & 1U);
                parity ^= bit;
                sub = (sub << 1) | static_cast<std::size_t>(bit);
            }
            double angle;
            if (g.kind == GateKind::FIXED) {
                angle = std::arg(g.fixed(static_cast<Eigen::Index>(sub), static_cast<Eigen::Index>(sub)));
            } else {
                const double theta = params[static_cast<std::size_t>(g.slots[0])];
                angle = parity ? theta / 2 : -theta / 2;
            }
            mu[static_cast<Eigen::Index>(b)] += angle;
        }
    }
    return mu;
}

namespace detail {

inline double fidelity_from_trace(cplx tr, double d) { return (d + std::norm(tr)) / (d * (d + 1)); }

/// Spectral data for O(d^2) traces Tr(R^dagger V_t) with R = Q diag(lambda) Q^dagger.
struct Spectral {
    CVector lambda;
    Eigen::MatrixXd overlap;  // |(Q^dagger W)_{jb}|^2
};

inline Spectral spectral_overlap(const CMatrix& q, const CVector& lambda, const CMatrix& w) {
    return {lambda, (q.adjoint() * w).cwiseAbs2()};
}

/// sum_j conj(lambda_j)^p sum_b overlap_jb exp(i s mu_b)
inline cplx spectral_trace(const Spectral& sp, double power, const Eigen::VectorXd& mu, double s) {
    const auto d = mu.size();
    CVector e(d);
    for (Eigen::Index b = 0; b < d; ++b) e[b] = std::polar(1.0, s * mu[b]);
    const CVector row = sp.overlap.cast<cplx>() * e;
    cplx tr = 0;
    for (Eigen::Index j = 0; j < d; ++j) {
        const double ph = std::arg(sp.lambda[j]);
        tr += std::polar(1.0, -power * ph) * row[j];
    }
    return tr;
}

/// Q diag(lambda^M) Q^dagger U(c), with the phases of lambda raised to the power M.
inline CMatrix fractional_reference(const CMatrix& q, const CVector& lambda, int M, const CMatrix& uc) {
    CVector lm(lambda.size());
    for (Eigen::Index j = 0; j < lm.size(); ++j) lm[j] = std::polar(1.0, M * std::arg(lambda[j]));
    return q * lm.asDiagonal() * q.adjoint() * uc;
}

}  // namespace detail

/// U_dt^M U(c), U(c) the Trotter step rebuilt with step size c.
inline DenseOperator fractional_trotter_unitary(const PauliSumHamiltonian& h, const TrotterConfig& cfg, int M,
                                                double c) {
    detail::require(M >= 0, "fractional_trotter_unitary: M must be >= 0");
    const Eigen::ComplexSchur<CMatrix> schur(trotter_unitary(h, cfg).matrix());
    TrotterConfig frac = cfg;
    frac.dt = c;
    return DenseOperator(h.qubits(), detail::fractional_reference(schur.matrixU(), schur.matrixT().diagonal(), M,
                                                                  trotter_unitary(h, frac).matrix()));
}

/// Average fidelity F(t) = 1 - d/(d+1) C_HST(reference(t), V_t) at t = M dt.
/// Trotter reference: U_dt^M, or U_dt^M U(c) at fractional t = M dt + c where
/// U(c) is the Trotter step rebuilt with step size c. Exact: exp(-i H t).
inline std::vector<SeriesPoint> fidelity_series(const VffAnsatz& a, std::span<const double> theta,
                                                std::span<const double> gamma, const PauliSumHamiltonian& h,
                                                const TrotterConfig& cfg, const FastForwardPlan& plan) {
    plan.validate();
    a.check(theta, gamma);
    const int n = a.qubits();
    if (h.qubits() != n) throw InvalidArgument("fidelity_series: Hamiltonian and ansatz qubit counts differ");
    auto same = [](double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(std::abs(x), std::abs(y)); };
    if (!same(plan.dt, cfg.dt) || !same(plan.dt, a.dt))
        throw InvalidArgument("fidelity_series: plan, Trotter and ansatz dt must agree");
    const bool want_exact = plan.reference != Reference::TROTTER;
    const bool want_trotter = plan.reference != Reference::EXACT;
    if (n > caps().dense_qubits && want_exact)
        throw CapExceeded("fidelity_series: exact reference needs n <= dense cap");

    // Time grid.
    std::vector<std::pair<int, int>> grid;  // (M, k): t = (M + k / res) dt
    for (int M = 0; M <= plan.M_max; M += plan.stride) {
        grid.emplace_back(M, 0);
        if (M < plan.fractional_M_max)
            for (int k = 1; k < plan.fractional_resolution; ++k) grid.emplace_back(M, k);
    }
    std::vector<SeriesPoint> out(grid.size());
    const double res = plan.fractional_resolution;

    if (n > caps().dense_qubits) {
        // Statevector Monte Carlo over Haar inputs, Trotter reference only.
        std::vector<std::vector<double>> fids(grid.size(), std::vector<double>(plan.mc_samples));
        for (std::size_t smp = 0; smp < plan.mc_samples; ++smp) {
            CounterRng rng(derive_seed(plan.mc_seed, smp));
            CVector psi(static_cast<Eigen::Index>(dim_of(n)));
            for (Eigen::Index i = 0; i < psi.size(); ++i) psi[i] = cplx(rng.normal(), rng.normal());
            psi.normalize();
            CVector upsi = psi;
            int at = 0;
            for (std::size_t g = 0; g < grid.size(); ++g) {
                const auto [M, k] = grid[g];
                while (at < M) {
                    apply_trotter_inplace(upsi, h, cfg);
                    ++at;
                }
                CVector ref = upsi;
                if (k > 0) {
                    TrotterConfig frac = cfg;
                    frac.dt = cfg.dt * k / res;
                    ref = psi;
                    apply_trotter_inplace(ref, h, frac);
                    for (int m = 0; m < M; ++m) apply_trotter_inplace(ref, h, cfg);
                }
                const double t = (M + k / res) * plan.dt;
                CVector vpsi = psi;
                apply_vff_inplace(vpsi, a, theta, gamma, t);
                fids[g][smp] = std::norm(ref.dot(vpsi));
            }
        }
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const double mean = pairwise_sum(fids[g]) / static_cast<double>(plan.mc_samples);
            double var = 0;
            for (double f : fids[g]) var += (f - mean) * (f - mean);
            var /= static_cast<double>(plan.mc_samples - 1);
            // Haar average of |<psi|X|psi>|^2 is the average fidelity.
            out[g].M = grid[g].first + grid[g].second / res;
            out[g].t = out[g].M * plan.dt;
            out[g].fid_vs_trotter = mean;
            out[g].stderr_mean = std::sqrt(var / static_cast<double>(plan.mc_samples));
        }
        return out;
    }

    const double d = static_cast<double>(dim_of(n));
    const CMatrix w = circuit_unitary(a.w, theta).matrix();
    const Eigen::VectorXd mu = diagonal_angles(a.d, gamma);

    std::optional<detail::Spectral> trot;
    CMatrix schur_q;
    Eigen::VectorXd energies;
    Eigen::MatrixXd exact_overlap;
    if (want_trotter) {
        const Eigen::ComplexSchur<CMatrix> schur(trotter_unitary(h, cfg).matrix());
        schur_q = schur.matrixU();
        trot = detail::spectral_overlap(schur_q, schur.matrixT().diagonal(), w);
    }
    if (want_exact) {
        const Eigen::SelfAdjointEigenSolver<CMatrix> es(h.dense().matrix());
        energies = es.eigenvalues();
        exact_overlap = (es.eigenvectors().adjoint() * w).cwiseAbs2();
    }

    parallel_for(grid.size(), [&](std::size_t g) {
        const auto [M, k] = grid[g];
        SeriesPoint p;
        p.M = M + k / res;
        p.t = p.M * plan.dt;
        const double s = a.time_scale(p.t);
        if (trot) {
            cplx tr;
            if (k == 0) {
                tr = detail::spectral_trace(*trot, M, mu, s);
            } else {
                TrotterConfig frac = cfg;
                frac.dt = cfg.dt * k / res;
                const CMatrix ref = detail::fractional_reference(schur_q, trot->lambda, M, trotter_unitary(h, frac).matrix());
                CVector e(mu.size());
                for (Eigen::Index b = 0; b < mu.size(); ++b) e[b] = std::polar(1.0, s * mu[b]);
                tr = (ref.adjoint() * w * e.asDiagonal() * w.adjoint()).trace();
            }
            p.fid_vs_trotter = detail::fidelity_from_trace(tr, d);
        }
        if (want_exact) {
            CVector e(mu.size());
            for (Eigen::Index b = 0; b < mu.size(); ++b) e[b] = std::polar(1.0, s * mu[b]);
            const CVector row = exact_overlap.cast<cplx>() * e;
            cplx tr = 0;
            for (Eigen::Index j = 0; j < row.size(); ++j) tr += std::polar(1.0, energies[j] * p.t) * row[j];
            p.fid_vs_exact = detail::fidelity_from_trace(tr, d);
        }
        out[g] = p;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Pauli decomposition

struct PauliWeights {
    int n = 0;
    Eigen::VectorXd eta;  // eta_k = Tr(sigma_k rho) / 2^n, base-4 index, qubit 0 most significant
};

/// Pauli string for base-4 index k (digit map 0 I, 1 X, 2 Y, 3 Z).
inline PauliString pauli_from_index(int n, std::size_t k) {
    std::vector<Pauli> letters(static_cast<std::size_t>(n));
    for (int q = n - 1; q >= 0; --q) {
        letters[static_cast<std::size_t>(q)] = static_cast<Pauli>(k & 3U);
        k >>= 2;
    }
    return PauliString(std::move(letters));
}

inline void require_pauli_cap(int n, const char* what) {
    if (n > caps().pauli_qubits)
        throw CapExceeded(std::string(what) + ": n=" + std::to_string(n) + " exceeds Pauli cap " +
                          std::to_string(caps().pauli_qubits));
}

inline PauliWeights pauli_decompose(const DenseOperator& rho) {
    const int n = rho.qubits();
    require_pauli_cap(n, "pauli_decompose");
    if (!rho.is_hermitian()) throw InvalidArgument("pauli_decompose: operator is not Hermitian");
    const std::size_t d = dim_of(n), count = std::size_t{1} << (2 * n);
    PauliWeights w{n, Eigen::VectorXd(static_cast<Eigen::Index>(count))};
    const CMatrix& m = rho.matrix();
    for (std::size_t k = 0; k < count; ++k) {
        const PauliString p = pauli_from_index(n, k);
        const std::uint64_t xm = p.x_mask(), zm = p.z_mask();
        const int yc = p.y_count();
        cplx tr = 0;
        for (std::uint64_t c = 0; c < d; ++c)
            tr += PauliString::phase_from(c, zm, yc) * m(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c ^ xm));
        w.eta[static_cast<Eigen::Index>(k)] = tr.real() / static_cast<double>(d);
    }
    return w;
}

inline DenseOperator pauli_reconstruct(const PauliWeights& w) {
    const int n = w.n;
    require_pauli_cap(n, "pauli_reconstruct");
    const std::size_t d = dim_of(n), count = std::size_t{1} << (2 * n);
    detail::require(static_cast<std::size_t>(w.eta.size()) == count, "pauli_reconstruct: weight vector has wrong length");
    CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < count; ++k) {
        const double eta = w.eta[static_cast<Eigen::Index>(k)];
        if (eta == 0.0) continue;
        const PauliString p = pauli_from_index(n, k);
        const std::uint64_t xm = p.x_mask(), zm = p.z_mask();
        const int yc = p.y_count();
        for (std::uint64_t c = 0; c < d; ++c)
            m(static_cast<Eigen::Index>(c ^ xm), static_cast<Eigen::Index>(c)) += eta * PauliString::phase_from(c, zm, yc);
    }
    return DenseOperator(n, std::move(m));
}

/// <psi| rho(w) |psi> = sum_k eta_k <psi|sigma_k|psi>
inline double fidelity_from_weights(const PauliWeights& w, const StateVector& psi) {
    if (psi.qubits() != w.n) throw InvalidArgument("fidelity_from_weights: dimension mismatch");
    const std::size_t d = dim_of(w.n), count = std::size_t{1} << (2 * w.n);
    detail::require(static_cast<std::size_t>(w.eta.size()) == count, "fidelity_from_weights: wrong weight length");
    const CVector& a = psi.amplitudes();
    double acc = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        const double eta = w.eta[static_cast<Eigen::Index>(k)];
        if (eta == 0.0) continue;
        const PauliString p = pauli_from_index(w.n, k);
        const std::uint64_t xm = p.x_mask(), zm = p.z_mask();
        const int yc = p.y_count();
        cplx e = 0;
        for (std::uint64_t c = 0; c < d; ++c)
            e += std::conj(a[static_cast<Eigen::Index>(c ^ xm)]) * PauliString::phase_from(c, zm, yc) *
                 a[static_cast<Eigen::Index>(c)];
        acc += eta * e.real();
    }
    return acc;
}

}  // namespace reff
