#include <gtest/gtest.h>

#include "reff/costs.hpp"
#include "reff/verify.hpp"
#include "test_util.hpp"

using namespace reff;
using reff::testing::max_abs;

namespace {

void expect_passes(const OracleReport& r) {
    EXPECT_TRUE(r.pass) << r.name;
    for (const auto& e : r.entries)
        EXPECT_TRUE(e.pass) << r.name << ": " << e.label << " analytic " << e.analytic << " estimate " << e.estimate;
}

void expect_identical(const OracleReport& a, const OracleReport& b) {
    ASSERT_EQ(a.entries.size(), b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        EXPECT_EQ(a.entries[i].estimate, b.entries[i].estimate) << a.entries[i].label;
        EXPECT_EQ(a.entries[i].stderr_mean, b.entries[i].stderr_mean);
    }
}

}  // namespace

TEST(Oracle, MomentsMergeMatchesSequential) {
    CounterRng rng(RngSeed{3});
    oracle::Moments all(2), left(2), right(2);
    for (int k = 0; k < 300; ++k) {
        const std::vector<double> x{rng.normal(), rng.uniform(0, 5)};
        all.add(x);
        (k < 120 ? left : right).add(x);
    }
    left.merge(right);
    EXPECT_EQ(left.count, 300u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_NEAR(left.mean[i], all.mean[i], 1e-12);
        EXPECT_NEAR(left.stderr_of(i), all.stderr_of(i), 1e-12);
    }
}

TEST(Oracle, EstimateIndependentOfThreadCount) {
    auto sample = [](CounterRng& rng, std::vector<double>& x) { x[0] = rng.normal(); };
    set_num_threads(1);
    const auto one = oracle::estimate(1000, 1, RngSeed{9}, sample);
    set_num_threads(4);
    const auto four = oracle::estimate(1000, 1, RngSeed{9}, sample);
    set_num_threads(0);
    EXPECT_EQ(one.mean[0], four.mean[0]);
    EXPECT_EQ(one.m2[0], four.m2[0]);
}

TEST(Oracle, IndexSubsetSumAgreesWithOperatorRoute) {
    CounterRng rng(RngSeed{8});
    for (int n = 1; n <= 4; ++n) {
        const auto d = static_cast<Eigen::Index>(dim_of(n));
        const CMatrix u = haar_unitary_matrix(dim_of(n), rng), v = haar_unitary_matrix(dim_of(n), rng);
        const double via_costs = expected_product_global(DenseOperator(n, u), DenseOperator(n, v)).value;
        EXPECT_NEAR(1.0 - oracle::subset_fidelity(u.adjoint() * v, n), via_costs, 1e-12) << n;
        EXPECT_NEAR(oracle::subset_fidelity(CMatrix::Identity(d, d), n), 1.0, 1e-12);
    }
}

TEST(Oracle, LocalCostOfMatchesCostsModule) {
    CounterRng rng(RngSeed{12});
    for (int n = 1; n <= 4; ++n) {
        const auto f = oracle::haar_factors(n, rng);
        const CVector psi = oracle::product_state(f);
        EXPECT_LT(max_abs(psi - StateVector::product(f).amplitudes()), 1e-14);
        EXPECT_NEAR(oracle::local_cost_of(psi, f), 0.0, 1e-12);
        const CVector chi = haar_unitary_matrix(dim_of(n), rng) * psi;
        EXPECT_NEAR(oracle::local_cost_of(chi, f), detail::local_term(chi, f), 1e-12);
    }
}

TEST(Oracle, HelpersOnSmallMatrices) {
    CounterRng rng(RngSeed{5});
    const CMatrix a = oracle::gaussian_matrix(3, rng), b = oracle::gaussian_matrix(3, rng);
    EXPECT_LT(std::abs(oracle::trace(a) - a.trace()), 1e-12);
    EXPECT_LT(std::abs(oracle::trace_product(a, b) - (a * b).trace()), 1e-12);
    const CMatrix h = oracle::random_hermitian(4, rng);
    EXPECT_LT(max_abs(h - h.adjoint()), 1e-15);
    const Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
    EXPECT_NEAR(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0, 1e-12);
    const CMatrix u = haar_unitary_matrix(4, rng);
    EXPECT_NEAR(oracle::hst(u, u), 0.0, 1e-12);
    EXPECT_NEAR(oracle::hst(u, std::polar(1.0, 0.7) * u), 0.0, 1e-12);
}

TEST(Oracle, ClosedFormsAtIdentity) {
    const CMatrix id = CMatrix::Identity(4, 4);
    const auto f = moment_closed_forms(id, id, id, id);
    EXPECT_NEAR(std::abs(f.id1 - 4.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(f.id2 - 4.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(f.id3 - 16.0), 0.0, 1e-12);
}

TEST(Verify, EachCheckPasses) {
    const RngSeed s{20240};
    expect_passes(check_single_qubit_twirl(20000, s));
    expect_passes(check_haar_first_moment(20000, s));
    expect_passes(check_moment_identities(20000, s));
    for (int n : {1, 2, 3}) expect_passes(check_subset_formula(n, 2, 20000, s));
    expect_passes(check_entangled_average(2, 2, 20000, s));
    expect_passes(check_cost_sandwiches(30, 500, s));
    expect_passes(check_perturbative(2, {1e-3, 1e-2}, s));
    expect_passes(check_power_bound(30, 6, s));
}

TEST(Verify, MonteCarloEntriesCarryStandardErrors) {
    const auto r = check_moment_identities(5000, RngSeed{1});
    ASSERT_TRUE(r.has_mc());
    for (const auto& e : r.entries) {
        if (e.stderr_mean) {
            EXPECT_GT(*e.stderr_mean, 0.0) << e.label;
        }
    }
    EXPECT_EQ(r.samples, 5000u);
}

TEST(Verify, BitReproducible) {
    expect_identical(check_moment_identities(5000, RngSeed{77}), check_moment_identities(5000, RngSeed{77}));
    expect_identical(check_subset_formula(2, 2, 5000, RngSeed{77}), check_subset_formula(2, 2, 5000, RngSeed{77}));
    expect_identical(check_power_bound(10, 4, RngSeed{77}), check_power_bound(10, 4, RngSeed{77}));
}

TEST(Verify, RerunOnlyForFailingMonteCarlo) {
    std::vector<std::size_t> calls;
    auto flaky = [&](std::size_t samples, RngSeed) {
        calls.push_back(samples);
        OracleReport r;
        r.samples = samples;
        r.entries.push_back(oracle::mc_entry("x", 0.0, calls.size() == 1 ? 1.0 : 0.0, 0.01));
        r.finish();
        return r;
    };
    const auto r = with_rerun(flaky, 100, RngSeed{1});
    EXPECT_EQ(calls, (std::vector<std::size_t>{100, 400}));
    EXPECT_TRUE(r.rerun);
    EXPECT_TRUE(r.pass);

    calls.clear();
    auto exact_fail = [&](std::size_t samples, RngSeed) {
        calls.push_back(samples);
        OracleReport r;
        r.entries.push_back(oracle::exact_entry("y", 0.0, 1.0, 1e-12));
        r.finish();
        return r;
    };
    const auto e = with_rerun(exact_fail, 100, RngSeed{1});
    EXPECT_EQ(calls.size(), 1u);
    EXPECT_FALSE(e.rerun);
    EXPECT_FALSE(e.pass);
}

TEST(Verify, EntryPredicates) {
    EXPECT_TRUE(oracle::mc_entry("a", 1.0, 1.02, 0.01).pass);
    EXPECT_FALSE(oracle::mc_entry("a", 1.0, 1.04, 0.01).pass);
    EXPECT_TRUE(oracle::le_entry("b", 1.0, 1.0).pass);
    EXPECT_TRUE(oracle::le_entry("b", 1.0 + 1e-11, 1.0).pass);
    EXPECT_FALSE(oracle::le_entry("b", 1.0 + 1e-9, 1.0).pass);
}

TEST(Verify, SuiteJson) {
    VerifyConfig cfg;
    cfg.samples = 20000;
    cfg.sandwich_trials = 20;
    cfg.local_samples = 500;
    cfg.subset_trials = 1;
    cfg.power_trials = 20;
    const auto reports = run_verify_suite(cfg);
    EXPECT_EQ(reports.size(), 11u);
    for (const auto& r : reports) {
        expect_passes(r);
        const auto j = to_json(r);
        EXPECT_EQ(j.at("name").get<std::string>(), r.name);
        EXPECT_EQ(j.at("entries").size(), r.entries.size());
    }
}
