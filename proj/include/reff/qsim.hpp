#pragma once

// Dense complex kernels: statevectors, operators, gate application, partial
// traces, norms, fidelities and Haar-random unitaries.
//
// Qubit ordering is big-endian: qubit 0 is the most significant bit of a
// basis index, so |q0 q1 ... q_{n-1}> has index sum_q b_q 2^{n-1-q}.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reff/errors.hpp"
#include "reff/rng.hpp"

namespace reff {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kNormTol = 1e-12;
inline constexpr double kUnitaryTol = 1e-10;
inline constexpr double kHermitianTol = 1e-10;

/// Size limits for exponential-memory paths. Adjustable at start-up.
struct Caps {
    int dense_qubits = 10;   // 2^n x 2^n operators
    int state_qubits = 14;   // 2^n statevectors
    int subset_qubits = 8;   // subset-sum expected cost, O(2^n 4^n)
    int pauli_qubits = 6;    // 4^n Pauli weights
};

inline Caps& caps() {
    static Caps value;
    return value;
}

inline void require_dense(int n, const char* what) {
    if (n > caps().dense_qubits)
        throw CapExceeded(std::string(what) + ": n=" + std::to_string(n) + " exceeds dense cap " +
                          std::to_string(caps().dense_qubits));
}

inline void require_state(int n, const char* what) {
    if (n > caps().state_qubits)
        throw CapExceeded(std::string(what) + ": n=" + std::to_string(n) + " exceeds statevector cap " +
                          std::to_string(caps().state_qubits));
}

constexpr std::size_t dim_of(int n) { return std::size_t{1} << n; }

/// Index bit that carries qubit q in an n-qubit register.
constexpr int bit_position(int n, int q) { return n - 1 - q; }

inline int qubits_for_dim(std::size_t dim) {
    if (dim == 0 || !std::has_single_bit(dim))
        throw InvalidArgument("dimension " + std::to_string(dim) + " is not a power of two");
    return std::countr_zero(dim);
}

// ---------------------------------------------------------------------------

class StateVector {
public:
    StateVector() = default;

    /// Validates length 2^n and unit norm within `tol`.
    StateVector(int n, CVector amplitudes, double tol = kNormTol) : n_(n), amps_(std::move(amplitudes)) {
        detail::require(n >= 0, "StateVector: negative qubit count");
        if (static_cast<std::size_t>(amps_.size()) != dim_of(n))
            throw InvalidArgument("StateVector: length " + std::to_string(amps_.size()) + " != 2^" +
                                  std::to_string(n));
        for (Eigen::Index i = 0; i < amps_.size(); ++i)
            if (!std::isfinite(amps_[i].real()) || !std::isfinite(amps_[i].imag()))
                throw NumericFailure("StateVector: non-finite amplitude");
        const double norm2 = amps_.squaredNorm();
        if (std::abs(norm2 - 1.0) > tol)
            throw InvalidArgument("StateVector: squared norm " + std::to_string(norm2) + " is not 1");
    }

    static StateVector basis(int n, std::size_t index) {
        detail::require(index < dim_of(n), "StateVector::basis: index out of range");
        CVector v = CVector::Zero(static_cast<Eigen::Index>(dim_of(n)));
        v[static_cast<Eigen::Index>(index)] = 1.0;
        return StateVector(n, std::move(v));
    }

    /// Tensor product of single-qubit states, factor 0 on qubit 0.
    static StateVector product(std::span<const std::array<cplx, 2>> factors) {
        const int n = static_cast<int>(factors.size());
        CVector v = CVector::Ones(1);
        for (const auto& f : factors) {
            CVector next(v.size() * 2);
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                next[2 * i] = v[i] * f[0];
                next[2 * i + 1] = v[i] * f[1];
            }
            v = std::move(next);
        }
        return StateVector(n, std::move(v), 1e-10);
    }

    int qubits() const { return n_; }
    std::size_t dim() const { return static_cast<std::size_t>(amps_.size()); }
    const CVector& amplitudes() const { return amps_; }
    cplx operator[](std::size_t i) const { return amps_[static_cast<Eigen::Index>(i)]; }

private:
    int n_ = 0;
    CVector amps_ = CVector::Ones(1);
};

// ---------------------------------------------------------------------------

class DenseOperator {
public:
    DenseOperator() = default;

    DenseOperator(int n, CMatrix entries) : n_(n), m_(std::move(entries)) {
        detail::require(n >= 0, "DenseOperator: negative qubit count");
        if (m_.rows() != m_.cols()) throw InvalidArgument("DenseOperator: matrix is not square");
        if (static_cast<std::size_t>(m_.rows()) != dim_of(n))
            throw InvalidArgument("DenseOperator: dimension " + std::to_string(m_.rows()) + " != 2^" +
                                  std::to_string(n));
    }

    explicit DenseOperator(CMatrix entries) : m_(std::move(entries)) {
        if (m_.rows() != m_.cols()) throw InvalidArgument("DenseOperator: matrix is not square");
        n_ = qubits_for_dim(static_cast<std::size_t>(m_.rows()));
    }

    static DenseOperator identity(int n) {
        const auto d = static_cast<Eigen::Index>(dim_of(n));
        return DenseOperator(n, CMatrix::Identity(d, d));
    }

    int qubits() const { return n_; }
    std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
    const CMatrix& matrix() const { return m_; }
    cplx operator()(std::size_t r, std::size_t c) const {
        return m_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }

    DenseOperator adjoint() const { return DenseOperator(n_, m_.adjoint()); }
    cplx trace() const { return m_.trace(); }

    bool is_unitary(double tol = kUnitaryTol) const {
        const CMatrix g = m_.adjoint() * m_;
        return (g - CMatrix::Identity(m_.rows(), m_.cols())).cwiseAbs().maxCoeff() <= tol;
    }

    bool is_hermitian(double tol = kHermitianTol) const {
        return m_.rows() == 0 || (m_ - m_.adjoint()).cwiseAbs().maxCoeff() <= tol;
    }

    friend DenseOperator operator*(const DenseOperator& a, const DenseOperator& b) {
        detail::require(a.n_ == b.n_, "DenseOperator product: qubit count mismatch");
        return DenseOperator(a.n_, a.m_ * b.m_);
    }

private:
    int n_ = 0;
    CMatrix m_ = CMatrix::Identity(1, 1);
};

inline DenseOperator kron(const DenseOperator& a, const DenseOperator& b) {
    const CMatrix& x = a.matrix();
    const CMatrix& y = b.matrix();
    CMatrix out(x.rows() * y.rows(), x.cols() * y.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
    return DenseOperator(a.qubits() + b.qubits(), std::move(out));
}

// ---------------------------------------------------------------------------
// Pauli strings

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

class PauliString {
public:
    PauliString() = default;
    explicit PauliString(std::vector<Pauli> letters) : letters_(std::move(letters)) {}

    static PauliString from_string(std::string_view text) {
        std::vector<Pauli> letters;
        letters.reserve(text.size());
        for (char c : text) {
            switch (c) {
                case 'I': case '_': letters.push_back(Pauli::I); break;
                case 'X': letters.push_back(Pauli::X); break;
                case 'Y': letters.push_back(Pauli::Y); break;
                case 'Z': letters.push_back(Pauli::Z); break;
                default: throw InvalidArgument(std::string("PauliString: bad letter '") + c + "'");
            }
        }
        return PauliString(std::move(letters));
    }

    /// Identity everywhere except the given (qubit, letter) pairs.
    static PauliString on(int n, std::initializer_list<std::pair<int, Pauli>> sites) {
        std::vector<Pauli> letters(static_cast<std::size_t>(n), Pauli::I);
        for (auto [q, p] : sites) {
            detail::require(q >= 0 && q < n, "PauliString::on: qubit out of range");
            letters[static_cast<std::size_t>(q)] = p;
        }
        return PauliString(std::move(letters));
    }

    int qubits() const { return static_cast<int>(letters_.size()); }
    Pauli operator[](int q) const { return letters_[static_cast<std::size_t>(q)]; }
    const std::vector<Pauli>& letters() const { return letters_; }

    std::string str() const {
        std::string s;
        for (Pauli p : letters_) s.push_back("IXYZ"[static_cast<int>(p)]);
        return s;
    }

    bool is_identity() const {
        return std::all_of(letters_.begin(), letters_.end(), [](Pauli p) { return p == Pauli::I; });
    }

    std::uint64_t x_mask() const { return mask([](Pauli p) { return p == Pauli::X || p == Pauli::Y; }); }
    std::uint64_t z_mask() const { return mask([](Pauli p) { return p == Pauli::Z || p == Pauli::Y; }); }
    int y_count() const { return static_cast<int>(std::count(letters_.begin(), letters_.end(), Pauli::Y)); }

    /// P|b> = phase(b) |b xor x_mask>, with P = i^{#Y} X^x Z^z.
    cplx phase(std::uint64_t b) const { return phase_from(b, z_mask(), y_count()); }

    static cplx phase_from(std::uint64_t b, std::uint64_t zmask, int ycount) {
        static constexpr std::array<cplx, 4> ipow{cplx{1, 0}, cplx{0, 1}, cplx{-1, 0}, cplx{0, -1}};
        const cplx base = ipow[static_cast<std::size_t>(ycount & 3)];
        return (std::popcount(b & zmask) & 1) ? -base : base;
    }

    /// out = P |in>
    void apply(const CVector& in, CVector& out) const {
        const std::uint64_t xm = x_mask(), zm = z_mask();
        const int yc = y_count();
        for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(in.size()); ++b)
            out[static_cast<Eigen::Index>(b ^ xm)] = phase_from(b, zm, yc) * in[static_cast<Eigen::Index>(b)];
    }

    DenseOperator dense() const {
        const int n = qubits();
        const auto d = dim_of(n);
        CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        const std::uint64_t xm = x_mask(), zm = z_mask();
        const int yc = y_count();
        for (std::uint64_t b = 0; b < d; ++b)
            m(static_cast<Eigen::Index>(b ^ xm), static_cast<Eigen::Index>(b)) = phase_from(b, zm, yc);
        return DenseOperator(n, std::move(m));
    }

    bool operator==(const PauliString&) const = default;

private:
    template <typename Pred>
    std::uint64_t mask(Pred pred) const {
        std::uint64_t m = 0;
        const int n = qubits();
        for (int q = 0; q < n; ++q)
            if (pred(letters_[static_cast<std::size_t>(q)])) m |= std::uint64_t{1} << bit_position(n, q);
        return m;
    }

    std::vector<Pauli> letters_;
};

// ---------------------------------------------------------------------------
// Gate application

namespace detail {

inline void check_targets(int n, std::span<const int> targets) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i] < 0 || targets[i] >= n)
            throw InvalidArgument("target qubit " + std::to_string(targets[i]) + " out of range for n=" +
                                  std::to_string(n));
        for (std::size_t j = 0; j < i; ++j)
            if (targets[i] == targets[j]) throw InvalidArgument("duplicate target qubit " + std::to_string(targets[i]));
    }
}

/// Offsets of the 2^k sub-basis states; targets[0] is the most significant sub-index bit.
inline std::vector<std::size_t> target_offsets(int n, std::span<const int> targets) {
    const std::size_t k = targets.size();
    std::vector<std::size_t> offs(std::size_t{1} << k, 0);
    for (std::size_t s = 0; s < offs.size(); ++s)
        for (std::size_t j = 0; j < k; ++j)
            if (s & (std::size_t{1} << (k - 1 - j))) offs[s] |= std::size_t{1} << bit_position(n, targets[j]);
    return offs;
}

inline void apply_1q(CVector& psi, int n, const CMatrix& g, int target) {
    const std::size_t stride = std::size_t{1} << bit_position(n, target);
    const std::size_t d = static_cast<std::size_t>(psi.size());
    const cplx g00 = g(0, 0), g01 = g(0, 1), g10 = g(1, 0), g11 = g(1, 1);
    for (std::size_t base = 0; base < d; base += 2 * stride)
        for (std::size_t i = base; i < base + stride; ++i) {
            const auto i0 = static_cast<Eigen::Index>(i), i1 = static_cast<Eigen::Index>(i + stride);
            const cplx a = psi[i0], b = psi[i1];
            psi[i0] = g00 * a + g01 * b;
            psi[i1] = g10 * a + g11 * b;
        }
}

inline void apply_2q(CVector& psi, int n, const CMatrix& g, int t0, int t1) {
    const std::size_t m0 = std::size_t{1} << bit_position(n, t0);
    const std::size_t m1 = std::size_t{1} << bit_position(n, t1);
    const std::size_t mask = m0 | m1;
    const std::size_t d = static_cast<std::size_t>(psi.size());
    const std::array<std::size_t, 4> off{0, m1, m0, m0 | m1};
    for (std::size_t base = 0; base < d; ++base) {
        if (base & mask) continue;
        std::array<cplx, 4> v;
        for (std::size_t s = 0; s < 4; ++s) v[s] = psi[static_cast<Eigen::Index>(base | off[s])];
        for (std::size_t r = 0; r < 4; ++r) {
            cplx acc = 0;
            for (std::size_t c = 0; c < 4; ++c) acc += g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * v[c];
            psi[static_cast<Eigen::Index>(base | off[r])] = acc;
        }
    }
}

/// In-place application of a 2^k x 2^k matrix on `targets`. No validation.
inline void apply_matrix_inplace(CVector& psi, int n, const CMatrix& g, std::span<const int> targets) {
    if (targets.size() == 1) return apply_1q(psi, n, g, targets[0]);
    if (targets.size() == 2) return apply_2q(psi, n, g, targets[0], targets[1]);
    const auto offs = target_offsets(n, targets);
    std::size_t mask = 0;
    for (int t : targets) mask |= std::size_t{1} << bit_position(n, t);
    const std::size_t d = static_cast<std::size_t>(psi.size());
    CVector v(static_cast<Eigen::Index>(offs.size()));
    for (std::size_t base = 0; base < d; ++base) {
        if (base & mask) continue;
        for (std::size_t s = 0; s < offs.size(); ++s)
            v[static_cast<Eigen::Index>(s)] = psi[static_cast<Eigen::Index>(base | offs[s])];
        const CVector w = g * v;
        for (std::size_t s = 0; s < offs.size(); ++s)
            psi[static_cast<Eigen::Index>(base | offs[s])] = w[static_cast<Eigen::Index>(s)];
    }
}

/// In-place diagonal gate: multiplies amplitude by diag[sub-index].
inline void apply_diagonal_inplace(CVector& psi, int n, std::span<const cplx> diag, std::span<const int> targets) {
    const std::size_t d = static_cast<std::size_t>(psi.size());
    const std::size_t k = targets.size();
    for (std::size_t b = 0; b < d; ++b) {
        std::size_t s = 0;
        for (std::size_t j = 0; j < k; ++j) s = (s << 1) | ((b >> bit_position(n, targets[j])) & 1U);
        psi[static_cast<Eigen::Index>(b)] *= diag[s];
    }
}

}  // namespace detail

/// Returns (embedded gate)|state>. The gate acts on `targets` with targets[0]
/// as its most significant qubit.
inline StateVector apply_gate(const StateVector& state, const DenseOperator& gate, std::span<const int> targets) {
    const int n = state.qubits();
    detail::check_targets(n, targets);
    if (static_cast<std::size_t>(gate.qubits()) != targets.size())
        throw InvalidArgument("apply_gate: gate acts on " + std::to_string(gate.qubits()) + " qubits but " +
                              std::to_string(targets.size()) + " targets given");
    if (!gate.is_unitary()) throw InvalidArgument("apply_gate: gate is not unitary");
    CVector psi = state.amplitudes();
    detail::apply_matrix_inplace(psi, n, gate.matrix(), targets);
    return StateVector(n, std::move(psi), 1e-10);
}

inline StateVector apply_gate(const StateVector& state, const DenseOperator& gate, std::initializer_list<int> targets) {
    return apply_gate(state, gate, std::span<const int>(targets.begin(), targets.size()));
}

/// Dense n-qubit embedding of a k-qubit matrix (identity elsewhere).
inline DenseOperator embed(const CMatrix& gate, std::span<const int> targets, int n) {
    detail::check_targets(n, targets);
    if (static_cast<std::size_t>(gate.rows()) != (std::size_t{1} << targets.size()) || gate.rows() != gate.cols())
        throw InvalidArgument("embed: gate size does not match target count");
    const auto d = static_cast<Eigen::Index>(dim_of(n));
    CMatrix m = CMatrix::Identity(d, d);
    for (Eigen::Index c = 0; c < d; ++c) {
        CVector col = m.col(c);
        detail::apply_matrix_inplace(col, n, gate, targets);
        m.col(c) = col;
    }
    return DenseOperator(n, std::move(m));
}

// ---------------------------------------------------------------------------
// Partial trace

/// Tr_{A^c}(op) for A = keep. Kept qubits appear in ascending order in the
/// result (lowest kept index is the most significant).
inline DenseOperator partial_trace(const DenseOperator& op, std::span<const int> keep) {
    const int n = op.qubits();
    std::vector<int> kept(keep.begin(), keep.end());
    detail::check_targets(n, kept);
    std::sort(kept.begin(), kept.end());
    std::vector<int> traced;
    for (int q = 0; q < n; ++q)
        if (!std::binary_search(kept.begin(), kept.end(), q)) traced.push_back(q);

    const auto keep_off = detail::target_offsets(n, kept);
    const auto trace_off = detail::target_offsets(n, traced);
    const CMatrix& m = op.matrix();
    const auto dk = static_cast<Eigen::Index>(keep_off.size());
    CMatrix out = CMatrix::Zero(dk, dk);
    for (Eigen::Index i = 0; i < dk; ++i)
        for (Eigen::Index j = 0; j < dk; ++j) {
            cplx acc = 0;
            for (std::size_t e : trace_off)
                acc += m(static_cast<Eigen::Index>(keep_off[static_cast<std::size_t>(i)] | e),
                         static_cast<Eigen::Index>(keep_off[static_cast<std::size_t>(j)] | e));
            out(i, j) = acc;
        }
    return DenseOperator(static_cast<int>(kept.size()), std::move(out));
}

inline DenseOperator partial_trace(const DenseOperator& op, std::initializer_list<int> keep) {
    return partial_trace(op, std::span<const int>(keep.begin(), keep.size()));
}

// ---------------------------------------------------------------------------
// Norms and fidelities

enum class SchattenP { One, Two, Infinity };

inline double schatten_norm(const CMatrix& m, SchattenP p) {
    if (m.size() == 0) return 0.0;
    if (p == SchattenP::Two) return m.norm();
    const Eigen::JacobiSVD<CMatrix> svd(m);
    const auto& s = svd.singularValues();
    return p == SchattenP::One ? s.sum() : s.maxCoeff();
}

inline double schatten_norm(const DenseOperator& op, SchattenP p) { return schatten_norm(op.matrix(), p); }

/// |<a|b>|^2
inline double state_fidelity(const StateVector& a, const StateVector& b) {
    if (a.qubits() != b.qubits()) throw InvalidArgument("state_fidelity: qubit count mismatch");
    return std::norm(a.amplitudes().dot(b.amplitudes()));
}

// ---------------------------------------------------------------------------
// Haar sampling and exponentials

/// Haar-distributed dim x dim unitary: complex Ginibre matrix, QR, then the
/// columns of Q rephased by diag(R)/|diag(R)|.
inline CMatrix haar_unitary_matrix(std::size_t dim, CounterRng& rng) {
    detail::require(dim >= 1, "haar_random_unitary: dim must be >= 1");
    const auto d = static_cast<Eigen::Index>(dim);
    CMatrix g(d, d);
    const double s = std::sqrt(0.5);
    for (Eigen::Index c = 0; c < d; ++c)
        for (Eigen::Index r = 0; r < d; ++r) {
            const double re = rng.normal();
            const double im = rng.normal();
            g(r, c) = cplx(s * re, s * im);
        }
    const Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix q = qr.householderQ();
    const CMatrix& r = qr.matrixQR();
    for (Eigen::Index c = 0; c < d; ++c) {
        const cplx rc = r(c, c);
        const double mag = std::abs(rc);
        q.col(c) *= mag > 0 ? rc / mag : cplx(1.0);
    }
    return q;
}

inline DenseOperator haar_random_unitary(int n, CounterRng& rng) {
    return DenseOperator(n, haar_unitary_matrix(dim_of(n), rng));
}

/// exp(-i t h) for Hermitian h, via eigendecomposition.
inline CMatrix hermitian_exp(const CMatrix& h, double t) {
    if (h.rows() != h.cols()) throw InvalidArgument("hermitian_exp: matrix is not square");
    if (h.rows() > 0 && (h - h.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol)
        throw InvalidArgument("hermitian_exp: matrix is not Hermitian");
    const Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    const auto& vals = es.eigenvalues();
    const CMatrix& vecs = es.eigenvectors();
    CVector phases(vals.size());
    for (Eigen::Index k = 0; k < vals.size(); ++k) phases[k] = std::exp(cplx(0.0, -t * vals[k]));
    return vecs * phases.asDiagonal() * vecs.adjoint();
}

inline DenseOperator hermitian_exp(const DenseOperator& h, double t) {
    return DenseOperator(h.qubits(), hermitian_exp(h.matrix(), t));
}

/// Total number operator sum_i (I - Z_i)/2 as a diagonal matrix.
inline DenseOperator number_operator(int n) {
    const auto d = dim_of(n);
    CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t b = 0; b < d; ++b) m(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(b)) = std::popcount(b);
    return DenseOperator(n, std::move(m));
}

/// Largest entry of |A B - B A|.
inline double commutator_norm(const CMatrix& a, const CMatrix& b) {
    return (a * b - b * a).cwiseAbs().maxCoeff();
}

}  // namespace reff
