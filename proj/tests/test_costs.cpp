#include <gtest/gtest.h>

#include "reff/costs.hpp"
#include "test_util.hpp"

using namespace reff;
using reff::testing::max_abs;
using reff::testing::random_vector;

namespace {

DenseOperator pauli(const char* s) { return PauliString::from_string(s).dense(); }

struct Instance {
    VffAnsatz a;
    std::vector<double> theta, gamma;
    Dataset data;
};

Instance random_instance(int n, std::size_t N, std::uint64_t seed) {
    CounterRng rng(RngSeed{seed});
    Instance in{make_ansatz(Model::Heisenberg, n, 2, GateKind::SYM, 0.1), {}, {}, {}};
    in.theta = random_vector(static_cast<std::size_t>(in.a.theta_count()), rng, 3.0);
    in.gamma = random_vector(static_cast<std::size_t>(in.a.gamma_count()), rng, 3.0);
    in.data = generate_dataset(build_heisenberg_chain(n, true), {2, 1, 0.1}, N, DataSource::HAAR1, RngSeed{seed + 1});
    return in;
}

/// Mean and stderr of f(psi) over Haar n-qubit states or Haar product states.
template <typename F>
std::pair<double, double> mc(int n, bool product, std::size_t samples, std::uint64_t seed, F f) {
    double s = 0, s2 = 0;
    const auto d = static_cast<Eigen::Index>(dim_of(n));
    for (std::size_t k = 0; k < samples; ++k) {
        CounterRng rng(derive_seed(RngSeed{seed}, k));
        CVector psi;
        if (product) {
            psi = sample_product_state(n, DataSource::HAAR1, rng).assemble().amplitudes();
        } else {
            psi = CVector(d);
            for (Eigen::Index i = 0; i < d; ++i) psi[i] = cplx(rng.normal(), rng.normal());
            psi.normalize();
        }
        const double x = f(psi);
        s += x;
        s2 += x * x;
    }
    const double ns = static_cast<double>(samples), mean = s / ns;
    return {mean, std::sqrt(std::max(0.0, s2 / ns - mean * mean) / (ns - 1))};
}

}  // namespace

TEST(CostValue, ClampsAndFlagsAnomaly) {
    const auto c = make_cost(1.0 + 1e-6, CostKind::HST);
    EXPECT_EQ(c.value, 1.0);
    EXPECT_TRUE(c.anomaly);
    const auto ok = make_cost(-1e-13, CostKind::HST);
    EXPECT_EQ(ok.value, 0.0);
    EXPECT_FALSE(ok.anomaly);
    EXPECT_THROW(make_cost(std::nan(""), CostKind::HST), NumericFailure);
}

TEST(EmpiricalGlobal, OrthogonalPairGivesOne) {
    // V = I at t = 0; one pair whose output is orthogonal to the input.
    Dataset d;
    d.n = 1;
    d.provenance.hamiltonian = PauliSumHamiltonian(1);
    d.pairs.push_back({ProductStateSpec{{Qubit{1.0, 0.0}}, {0}}, StateVector::basis(1, 0), StateVector::basis(1, 1)});
    const auto a = VffAnsatz(ParamCircuit(1), build_diagonal(1, Model::XY), 0.1);
    const std::vector<double> th, ga{0.4};
    EXPECT_NEAR(cost_global_empirical(a, th, ga, 0.0, d).value, 1.0, 1e-15);
    EXPECT_NEAR(cost_local_empirical(a, th, ga, 0.0, d).value, 1.0, 1e-15);
}

TEST(EmpiricalGlobal, MatchesTraceNormForm) {
    const auto in = random_instance(3, 4, 50);
    const CMatrix v = vff_unitary(in.a, in.theta, in.gamma, 0.1).matrix();
    double acc = 0;
    for (const auto& p : in.data.pairs) {
        const CVector phi = p.output.amplitudes(), vpsi = v * p.input.amplitudes();
        const CMatrix diff = phi * phi.adjoint() - vpsi * vpsi.adjoint();
        acc += std::pow(schatten_norm(diff, SchattenP::One), 2);
    }
    acc /= 4.0 * static_cast<double>(in.data.size());
    EXPECT_NEAR(cost_global_empirical(in.a, in.theta, in.gamma, 0.1, in.data).value, acc, 1e-10);
}

TEST(EmpiricalLocal, SandwichPerPair) {
    for (std::uint64_t seed = 60; seed < 70; ++seed) {
        const auto in = random_instance(3, 1, seed);
        const double g = cost_global_empirical(in.a, in.theta, in.gamma, 0.1, in.data).value;
        const double l = cost_local_empirical(in.a, in.theta, in.gamma, 0.1, in.data).value;
        EXPECT_LE(l, g + 1e-12);
        EXPECT_LE(g, 3 * l + 1e-12);
    }
}

TEST(EmpiricalLocal, SingleQubitEqualsGlobal) {
    const auto h = PauliSumHamiltonian(1);
    auto hz = h;
    hz.add_term(0.9, PauliString::from_string("Z"));
    const auto data = generate_dataset(hz, {}, 3, DataSource::HAAR1, RngSeed{70});
    const auto a = VffAnsatz(ParamCircuit(1), build_diagonal(1, Model::XY), 0.1);
    const std::vector<double> th, ga{0.4};
    EXPECT_NEAR(cost_global_empirical(a, th, ga, 0.1, data).value, cost_local_empirical(a, th, ga, 0.1, data).value,
                1e-14);
}

TEST(EmpiricalLocal, RequiresFactors) {
    const auto in = random_instance(2, 1, 71);
    const auto ent = generate_dataset(build_heisenberg_chain(2, true), {}, 2, DataSource::HAAR_N, RngSeed{72});
    EXPECT_THROW(cost_local_empirical(in.a, in.theta, in.gamma, 0.1, ent), InvalidArgument);
    Dataset empty;
    empty.n = 2;
    EXPECT_THROW(cost_global_empirical(in.a, in.theta, in.gamma, 0.1, empty), InvalidArgument);
}

TEST(Hst, Examples) {
    CounterRng rng(RngSeed{73});
    const auto u = haar_random_unitary(3, rng);
    EXPECT_NEAR(cost_hst(u, u).value, 0.0, 1e-14);
    const DenseOperator phased(3, std::polar(1.0, 0.7) * u.matrix());
    EXPECT_NEAR(cost_hst(u, phased).value, 0.0, 1e-14);
    EXPECT_NEAR(cost_hst(pauli("I"), pauli("X")).value, 1.0, 1e-15);
    EXPECT_THROW(cost_hst(pauli("I"), pauli("XX")), InvalidArgument);
}

TEST(ExpectedEntangled, ExamplesAndMc) {
    EXPECT_NEAR(expected_entangled_global(pauli("I"), pauli("X")).value, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(average_fidelity(pauli("I"), pauli("X")), 1.0 / 3.0, 1e-15);
    CounterRng rng(RngSeed{74});
    const auto u = haar_random_unitary(2, rng), v = haar_random_unitary(2, rng);
    EXPECT_NEAR(expected_entangled_global(u, u).value, 0.0, 1e-14);
    EXPECT_NEAR(average_fidelity(u, u), 1.0, 1e-14);
    const CMatrix w = u.matrix().adjoint() * v.matrix();
    const auto [mean, se] = mc(2, false, 100000, 75, [&](const CVector& psi) { return std::norm(psi.dot(w * psi)); });
    EXPECT_LE(std::abs(mean - average_fidelity(u, v)), 3 * se + 1e-12);
}

TEST(ExpectedProduct, Examples) {
    for (int n : {1, 2, 4})
        EXPECT_NEAR(expected_product_global(DenseOperator::identity(n), DenseOperator::identity(n)).value, 0.0, 1e-14);
    EXPECT_NEAR(expected_product_global(pauli("II"), pauli("XX")).value, 8.0 / 9.0, 1e-14);
    // n = 1: C = (2/3) C_HST
    CounterRng rng(RngSeed{76});
    const auto u = haar_random_unitary(1, rng), v = haar_random_unitary(1, rng);
    EXPECT_NEAR(expected_product_global(u, v).value, 2.0 / 3.0 * cost_hst(u, v).value, 1e-12);
    const int over = caps().subset_qubits + 1;
    EXPECT_THROW(expected_product_global(DenseOperator::identity(over), DenseOperator::identity(over)), CapExceeded);
}

TEST(ExpectedProduct, MatchesMc) {
    for (int n : {1, 2, 3}) {
        CounterRng rng(RngSeed{77 + static_cast<std::uint64_t>(n)});
        const auto u = haar_random_unitary(n, rng), v = haar_random_unitary(n, rng);
        const CMatrix w = u.matrix().adjoint() * v.matrix();
        const auto [mean, se] =
            mc(n, true, 100000, 80 + static_cast<std::uint64_t>(n), [&](const CVector& psi) { return 1.0 - std::norm(psi.dot(w * psi)); });
        EXPECT_LE(std::abs(mean - expected_product_global(u, v).value), 3 * se + 1e-12) << n;
    }
}

TEST(ExpectedProductLocal, Properties) {
    CounterRng rng(RngSeed{85});
    const auto u = haar_random_unitary(3, rng), v = haar_random_unitary(3, rng);
    const auto same = expected_product_local_mc(u, u, 200, RngSeed{86});
    EXPECT_NEAR(same.value, 0.0, 1e-14);
    EXPECT_NEAR(*same.stderr_mean, 0.0, 1e-14);
    const auto l = expected_product_local_mc(u, v, 20000, RngSeed{87});
    const double g = expected_product_global(u, v).value;
    ASSERT_TRUE(l.stderr_mean);
    EXPECT_LE(l.value, g + 3 * *l.stderr_mean);
    EXPECT_GE(l.value, g / 3 - 3 * *l.stderr_mean);
    const auto u1 = haar_random_unitary(1, rng), v1 = haar_random_unitary(1, rng);
    const auto l1 = expected_product_local_mc(u1, v1, 20000, RngSeed{88});
    EXPECT_LE(std::abs(l1.value - expected_product_global(u1, v1).value), 3 * *l1.stderr_mean + 1e-12);
    EXPECT_THROW(expected_product_local_mc(u, v, 10, RngSeed{1}), InvalidArgument);
}

TEST(TensorPower, Examples) {
    EXPECT_NEAR(tensor_power_cost_relation(0.37, 1), 2.0 / 3.0 * 0.37, 1e-15);
    EXPECT_NEAR(tensor_power_cost_relation(0.0, 5), 0.0, 1e-15);
    EXPECT_THROW(tensor_power_cost_relation(1.5, 2), InvalidArgument);
    CounterRng rng(RngSeed{89});
    for (int k = 0; k < 5; ++k) {
        const auto w1 = haar_random_unitary(1, rng);
        const auto w3 = kron(kron(w1, w1), w1);
        const double c = cost_hst(DenseOperator::identity(3), w3).value;
        EXPECT_NEAR(tensor_power_cost_relation(c, 3), expected_product_global(DenseOperator::identity(3), w3).value, 1e-10);
    }
}

TEST(Sandwiches, RandomPairs) {
    for (int n : {2, 3}) {
        const double d = static_cast<double>(dim_of(n));
        CounterRng rng(RngSeed{90 + static_cast<std::uint64_t>(n)});
        for (int k = 0; k < 100; ++k) {
            const auto u = haar_random_unitary(n, rng), v = haar_random_unitary(n, rng);
            const double p = expected_product_global(u, v).value;
            const double e = expected_entangled_global(u, v).value;
            const double h = cost_hst(u, v).value;
            EXPECT_LE(p, (d + 1) / d * e + 1e-10);
            EXPECT_LE((d + 1) / d * e, 2 * p + 1e-10);
            EXPECT_LE(p, h + 1e-10);
            EXPECT_LE(h, p + 2 / d + 2 * std::sqrt(2 / d) + 1e-10);
        }
    }
}
