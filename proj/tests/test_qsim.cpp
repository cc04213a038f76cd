#include <gtest/gtest.h>

#include <numbers>

#include "reff/qsim.hpp"
#include "test_util.hpp"

using namespace reff;
using reff::testing::max_abs;

namespace {

CMatrix pauli_x() { return PauliString::from_string("X").dense().matrix(); }

CMatrix cnot() {
    CMatrix m = CMatrix::Zero(4, 4);
    m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1.0;
    return m;
}

}  // namespace

TEST(StateVector, RejectsUnnormalized) {
    CVector v(2);
    v << 1.0, 1.0;
    EXPECT_THROW(StateVector(1, v), InvalidArgument);
    EXPECT_THROW(StateVector(2, CVector::Ones(2) / std::sqrt(2.0)), InvalidArgument);
}

TEST(StateVector, BigEndianBasis) {
    const auto s = StateVector::basis(3, 0b100);
    EXPECT_EQ(s[4], cplx(1.0));
    // qubit 0 carries the most significant bit
    const std::array<cplx, 2> one{0.0, 1.0}, zero{1.0, 0.0};
    const std::vector<std::array<cplx, 2>> f{one, zero, zero};
    EXPECT_LT(max_abs(StateVector::product(f).amplitudes() - s.amplitudes()), 1e-15);
}

TEST(ApplyGate, IdentityLeavesStateUnchanged) {
    CounterRng rng(RngSeed{1});
    const auto psi = reff::testing::random_state(3, rng);
    for (int q = 0; q < 3; ++q) {
        const auto out = apply_gate(psi, DenseOperator::identity(1), {q});
        EXPECT_LT(max_abs(out.amplitudes() - psi.amplitudes()), 1e-15);
    }
}

TEST(ApplyGate, XOnQubitZero) {
    const auto out = apply_gate(StateVector::basis(2, 0), DenseOperator(pauli_x()), {0});
    EXPECT_NEAR(std::abs(out[0b10]), 1.0, 1e-15);
}

TEST(ApplyGate, BellConstruction) {
    CVector v = CVector::Zero(4);
    v[0] = v[2] = 1.0 / std::sqrt(2.0);
    const auto out = apply_gate(StateVector(2, v), DenseOperator(cnot()), {0, 1});
    EXPECT_NEAR(out[0].real(), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(out[3].real(), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(std::abs(out[1]) + std::abs(out[2]), 0.0, 1e-15);
}

TEST(ApplyGate, RejectsBadTargets) {
    const auto psi = StateVector::basis(2, 0);
    EXPECT_THROW(apply_gate(psi, DenseOperator(pauli_x()), {2}), InvalidArgument);
    EXPECT_THROW(apply_gate(psi, DenseOperator(cnot()), {1, 1}), InvalidArgument);
    EXPECT_THROW(apply_gate(psi, DenseOperator(cnot()), {0}), InvalidArgument);
}

TEST(ApplyGate, MatchesDenseEmbedding) {
    CounterRng rng(RngSeed{2});
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 4;
        const auto psi = reff::testing::random_state(n, rng);
        const CMatrix g = haar_unitary_matrix(4, rng);
        const int a = static_cast<int>(rng.below(n));
        int b = static_cast<int>(rng.below(n - 1));
        if (b >= a) ++b;
        const std::vector<int> t{a, b};
        const auto out = apply_gate(psi, DenseOperator(g), t);
        const CVector expect = embed(g, t, n).matrix() * psi.amplitudes();
        EXPECT_LT(max_abs(out.amplitudes() - expect), 1e-12);
        EXPECT_NEAR(out.amplitudes().norm(), 1.0, 1e-12);
    }
}

TEST(PartialTrace, IdentityScaling) {
    const auto r = partial_trace(DenseOperator::identity(4), {1, 3});
    EXPECT_LT(max_abs(r.matrix() - 4.0 * CMatrix::Identity(4, 4)), 1e-14);
}

TEST(PartialTrace, TracelessFactorVanishes) {
    const auto xz = PauliString::from_string("XZ").dense();
    EXPECT_LT(max_abs(partial_trace(xz, {0}).matrix()), 1e-15);
}

TEST(PartialTrace, CnotKeepControl) {
    // index-level: sum_t CNOT[(c,t),(c',t)]
    const CMatrix m = cnot();
    CMatrix oracle = CMatrix::Zero(2, 2);
    for (int c = 0; c < 2; ++c)
        for (int cp = 0; cp < 2; ++cp)
            for (int t = 0; t < 2; ++t) oracle(c, cp) += m(2 * c + t, 2 * cp + t);
    const auto r = partial_trace(DenseOperator(m), {0});
    EXPECT_LT(max_abs(r.matrix() - oracle), 1e-15);
    EXPECT_NEAR(r(0, 0).real(), 2.0, 1e-15);
    EXPECT_NEAR(std::abs(r(1, 1)), 0.0, 1e-15);
}

TEST(PartialTrace, TracePreservedAndComposes) {
    CounterRng rng(RngSeed{3});
    const DenseOperator op = haar_random_unitary(4, rng);
    const auto full = partial_trace(op, std::initializer_list<int>{});
    EXPECT_LT(std::abs(full(0, 0) - op.trace()), 1e-12);
    // Tr_{3}(Tr_{1}(op)) == Tr_{1,3}(op): keep {0,2,3} then keep qubits {0,1} of that
    const auto step = partial_trace(partial_trace(op, {0, 2, 3}), {0, 1});
    EXPECT_LT(max_abs(step.matrix() - partial_trace(op, {0, 2}).matrix()), 1e-12);
    EXPECT_THROW(partial_trace(op, {4}), InvalidArgument);
}

TEST(SchattenNorm, Examples) {
    EXPECT_NEAR(schatten_norm(DenseOperator::identity(3), SchattenP::Two), std::sqrt(8.0), 1e-14);
    for (auto p : {SchattenP::One, SchattenP::Two, SchattenP::Infinity})
        EXPECT_EQ(schatten_norm(CMatrix::Zero(4, 4), p), 0.0);
    EXPECT_NEAR(schatten_norm(pauli_x() - CMatrix::Identity(2, 2), SchattenP::Two), 2.0, 1e-14);
    EXPECT_NEAR(schatten_norm(pauli_x() - CMatrix::Identity(2, 2), SchattenP::One), 2.0, 1e-14);
    EXPECT_NEAR(schatten_norm(pauli_x() - CMatrix::Identity(2, 2), SchattenP::Infinity), 2.0, 1e-14);
}

TEST(StateFidelity, Examples) {
    CounterRng rng(RngSeed{4});
    const auto a = reff::testing::random_state(3, rng);
    EXPECT_NEAR(state_fidelity(a, a), 1.0, 1e-14);
    EXPECT_NEAR(state_fidelity(StateVector::basis(1, 0), StateVector::basis(1, 1)), 0.0, 1e-15);
    CVector plus(2);
    plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(state_fidelity(StateVector::basis(1, 0), StateVector(1, plus)), 0.5, 1e-15);
    EXPECT_THROW(state_fidelity(a, StateVector::basis(2, 0)), InvalidArgument);
}

TEST(HaarUnitary, UnitaryAndDeterministic) {
    CounterRng r1(RngSeed{5}), r2(RngSeed{5});
    const auto u = haar_random_unitary(3, r1);
    EXPECT_TRUE(u.is_unitary());
    EXPECT_EQ(max_abs(u.matrix() - haar_random_unitary(3, r2).matrix()), 0.0);
}

TEST(HaarUnitary, FirstMomentTwirl) {
    // mean of U A U^dag -> Tr(A)/d I, entrywise within 3 standard errors
    const int d = 4;
    CounterRng fixed(RngSeed{6});
    CMatrix A(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) A(i, j) = cplx(fixed.normal(), fixed.normal());
    const std::size_t samples = 100000;
    CMatrix sum = CMatrix::Zero(d, d);
    Eigen::MatrixXd sq_re = Eigen::MatrixXd::Zero(d, d), sq_im = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t k = 0; k < samples; ++k) {
        CounterRng rng(derive_seed(RngSeed{7}, k));
        const CMatrix u = haar_unitary_matrix(d, rng);
        const CMatrix x = u * A * u.adjoint();
        sum += x;
        sq_re += x.real().cwiseAbs2();
        sq_im += x.imag().cwiseAbs2();
    }
    const double ns = static_cast<double>(samples);
    const CMatrix mean = sum / ns;
    const CMatrix expect = A.trace() / static_cast<double>(d) * CMatrix::Identity(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const double se_re = std::sqrt((sq_re(i, j) / ns - std::pow(mean(i, j).real(), 2)) / (ns - 1));
            const double se_im = std::sqrt((sq_im(i, j) / ns - std::pow(mean(i, j).imag(), 2)) / (ns - 1));
            EXPECT_LE(std::abs(mean(i, j).real() - expect(i, j).real()), 3 * se_re + 1e-12) << i << "," << j;
            EXPECT_LE(std::abs(mean(i, j).imag() - expect(i, j).imag()), 3 * se_im + 1e-12) << i << "," << j;
        }
}

TEST(HermitianExp, Examples) {
    const auto z = PauliString::from_string("Z").dense();
    EXPECT_LT(max_abs(hermitian_exp(z, 0.0).matrix() - CMatrix::Identity(2, 2)), 1e-15);
    const auto e = hermitian_exp(z, std::numbers::pi / 2);
    EXPECT_LT(std::abs(e(0, 0) - std::polar(1.0, -std::numbers::pi / 2)), 1e-15);
    EXPECT_LT(std::abs(e(1, 1) - std::polar(1.0, std::numbers::pi / 2)), 1e-15);
    CounterRng rng(RngSeed{8});
    CMatrix g(8, 8);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) g(i, j) = cplx(rng.normal(), rng.normal());
    const DenseOperator h(CMatrix((g + g.adjoint()) / 2.0));
    const auto prod = hermitian_exp(h, 0.3) * hermitian_exp(h, 0.45);
    EXPECT_LT(max_abs(prod.matrix() - hermitian_exp(h, 0.75).matrix()), 1e-10);
    EXPECT_THROW(hermitian_exp(DenseOperator(g), 1.0), InvalidArgument);
}

TEST(PauliString, DenseIsHermitianUnitaryWithTrace) {
    for (const char* s : {"I", "X", "Y", "Z", "XY", "ZIY", "IIII", "YYXZ"}) {
        const auto p = PauliString::from_string(s);
        const auto m = p.dense();
        EXPECT_TRUE(m.is_hermitian(1e-15));
        EXPECT_TRUE(m.is_unitary(1e-15));
        const double expect = p.is_identity() ? static_cast<double>(m.dim()) : 0.0;
        EXPECT_NEAR(std::abs(m.trace()), expect, 1e-15) << s;
    }
}

TEST(PauliString, ApplyMatchesKronecker) {
    const CMatrix x = pauli_x();
    CMatrix y(2, 2), z(2, 2);
    y << 0, cplx(0, -1), cplx(0, 1), 0;
    z << 1, 0, 0, -1;
    const CMatrix k = kron(kron(DenseOperator(y), DenseOperator(CMatrix::Identity(2, 2))), DenseOperator(z)).matrix();
    EXPECT_LT(max_abs(PauliString::from_string("YIZ").dense().matrix() - k), 1e-15);
    EXPECT_LT(max_abs(PauliString::from_string("X").dense().matrix() - x), 1e-15);
}

TEST(Caps, DenseCapEnforced) {
    EXPECT_THROW(require_dense(caps().dense_qubits + 1, "test"), CapExceeded);
    EXPECT_THROW(require_state(caps().state_qubits + 1, "test"), CapExceeded);
}
