#include <gtest/gtest.h>

#include "reff/hamiltonians.hpp"
#include "test_util.hpp"

using namespace reff;
using reff::testing::max_abs;

namespace {

std::vector<std::pair<double, std::string>> listing(const PauliSumHamiltonian& h) {
    std::vector<std::pair<double, std::string>> out;
    for (const auto& t : h.terms()) out.emplace_back(t.coefficient, t.pauli.str());
    return out;
}

double trotter_distance(const PauliSumHamiltonian& h, TrotterConfig cfg) {
    return schatten_norm(trotter_unitary(h, cfg).matrix() - exact_unitary(h, cfg.dt).matrix(), SchattenP::Two);
}

}  // namespace

TEST(XYChain, Terms) {
    using V = std::vector<std::pair<double, std::string>>;
    EXPECT_EQ(listing(build_xy_chain(2, false)), (V{{1.0, "XX"}, {1.0, "YY"}}));
    EXPECT_EQ(build_xy_chain(3, false).terms().size(), 4u);
    const auto p = build_xy_chain(3, true);
    EXPECT_EQ(p.terms().size(), 6u);
    EXPECT_EQ(p.terms()[4].pauli.str(), "XIX");
    EXPECT_THROW(build_xy_chain(1, false), InvalidArgument);
}

TEST(HeisenbergChain, Terms) {
    using V = std::vector<std::pair<double, std::string>>;
    EXPECT_EQ(listing(build_heisenberg_chain(2, false)), (V{{0.25, "XX"}, {0.25, "YY"}, {0.25, "ZZ"}}));
    EXPECT_EQ(build_heisenberg_chain(4, true).terms().size(), 12u);
    EXPECT_THROW(build_heisenberg_chain(1, true), InvalidArgument);
}

TEST(HeisenbergChain, ConservesMagnetization) {
    for (int n : {2, 3, 4, 5}) {
        const auto h = build_heisenberg_chain(n, true).dense().matrix();
        CMatrix z = CMatrix::Zero(h.rows(), h.cols());
        for (int q = 0; q < n; ++q) {
            std::string s(static_cast<std::size_t>(n), 'I');
            s[static_cast<std::size_t>(q)] = 'Z';
            z += PauliString::from_string(s).dense().matrix();
        }
        EXPECT_LT(commutator_norm(h, z), 1e-12);
    }
}

TEST(PauliSum, DropsZeroTermsAndIsHermitian) {
    PauliSumHamiltonian h(2);
    h.add_term(0.0, PauliString::from_string("XX"));
    h.add_term(0.3, PauliString::from_string("ZY"));
    EXPECT_EQ(h.terms().size(), 1u);
    EXPECT_TRUE(h.dense().is_hermitian(1e-15));
    EXPECT_THROW(h.add_term(1.0, PauliString::from_string("X")), InvalidArgument);
}

TEST(PauliSum, ApplyMatchesDense) {
    CounterRng rng(RngSeed{11});
    const auto h = build_heisenberg_chain(4, true);
    const auto psi = reff::testing::random_state(4, rng);
    EXPECT_LT(max_abs(h.apply(psi.amplitudes()) - h.dense().matrix() * psi.amplitudes()), 1e-13);
}

TEST(Trotter, SingleTermIsExact) {
    PauliSumHamiltonian h(3);
    h.add_term(0.7, PauliString::from_string("XYZ"));
    for (int order : {1, 2})
        for (int r : {1, 3}) {
            const TrotterConfig cfg{order, r, 0.37};
            EXPECT_LT(max_abs(trotter_unitary(h, cfg).matrix() - hermitian_exp(h.dense(), 0.37).matrix()), 1e-12);
        }
}

TEST(Trotter, CommutingTermsExact) {
    PauliSumHamiltonian h(3);
    h.add_term(0.4, PauliString::from_string("ZZI"));
    h.add_term(-1.1, PauliString::from_string("IZZ"));
    h.add_term(0.9, PauliString::from_string("ZIZ"));
    h.add_term(0.2, PauliString::from_string("IIZ"));
    const TrotterConfig cfg{1, 1, 0.5};
    EXPECT_LT(max_abs(trotter_unitary(h, cfg).matrix() - hermitian_exp(h.dense(), 0.5).matrix()), 1e-12);
    EXPECT_LT(trotter_error(h, cfg), 1e-12);
}

TEST(Trotter, SecondOrderErrorScaling) {
    for (int n : {2, 3, 4}) {
        const auto h = build_xy_chain(n, false);
        const double e1 = trotter_distance(h, {2, 1, 0.1});
        const double e2 = trotter_distance(h, {2, 1, 0.05});
        if (n == 2) {
            // XX and YY commute on two qubits: no splitting error at all.
            EXPECT_LT(e1, 1e-12);
            continue;
        }
        EXPECT_GE(e1 / e2, 6.0) << n;
        EXPECT_LE(e1 / e2, 10.0) << n;
    }
}

TEST(Trotter, FirstOrderErrorScaling) {
    const auto h = build_heisenberg_chain(3, false);
    const double ratio = trotter_distance(h, {1, 1, 0.1}) / trotter_distance(h, {1, 1, 0.05});
    EXPECT_GT(ratio, 3.5);
    EXPECT_LT(ratio, 4.5);
}

TEST(Trotter, UnitaryAndNumberConserving) {
    for (bool periodic : {false, true})
        for (int order : {1, 2})
            for (auto h : {build_xy_chain(4, periodic), build_heisenberg_chain(4, periodic)}) {
                const auto u = trotter_unitary(h, {order, 2, 0.3});
                EXPECT_TRUE(u.is_unitary(1e-10));
                EXPECT_LT(commutator_norm(u.matrix(), number_operator(4).matrix()), 1e-10);
            }
}

TEST(Trotter, StatevectorMatchesDense) {
    CounterRng rng(RngSeed{12});
    const auto h = build_heisenberg_chain(4, true);
    const TrotterConfig cfg{2, 3, 0.2};
    const auto psi = reff::testing::random_state(4, rng);
    const auto out = apply_trotter(psi, h, cfg);
    EXPECT_LT(max_abs(out.amplitudes() - trotter_unitary(h, cfg).matrix() * psi.amplitudes()), 1e-13);
}

TEST(Trotter, ErrorNonNegativeAndReported) {
    const auto h = build_xy_chain(3, false);
    const double eps = trotter_error(h, {2, 10, 0.1});
    EXPECT_GE(eps, 0.0);
    EXPECT_LT(eps, trotter_error(h, {2, 1, 0.1}));
    EXPECT_THROW(TrotterConfig({3, 1, 0.1}).validate(), InvalidArgument);
    EXPECT_THROW(TrotterConfig({2, 0, 0.1}).validate(), InvalidArgument);
}

TEST(HamiltonianJson, RoundTrip) {
    const auto h = build_heisenberg_chain(4, true);
    const auto back = hamiltonian_from_json(nlohmann::json::parse(to_json(h).dump()));
    EXPECT_EQ(back.qubits(), 4);
    EXPECT_EQ(back.model(), Model::Heisenberg);
    EXPECT_TRUE(back.periodic());
    EXPECT_EQ(listing(back), listing(h));
    const TrotterConfig cfg{1, 7, 0.125};
    EXPECT_EQ(trotter_from_json(to_json(cfg)), cfg);
    EXPECT_THROW(hamiltonian_from_json(nlohmann::json{{"n", 2}}), FormatError);
}
