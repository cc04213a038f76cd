#pragma once

// Training data: random product (or entangled) inputs and their images under
// the Trotterized target, plus a JSON file format.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "reff/hamiltonians.hpp"
#include "reff/parallel.hpp"
#include "reff/qsim.hpp"
#include "reff/rng.hpp"

namespace reff {

using Qubit = std::array<cplx, 2>;

enum class DataSource { HAAR1, STABILIZER, HAAR_N };

inline std::string to_string(DataSource s) {
    switch (s) {
        case DataSource::HAAR1: return "HAAR1";
        case DataSource::STABILIZER: return "STABILIZER";
        case DataSource::HAAR_N: return "HAAR_N";
    }
    return "?";
}

inline DataSource data_source_from_string(const std::string& s) {
    if (s == "HAAR1") return DataSource::HAAR1;
    if (s == "STABILIZER") return DataSource::STABILIZER;
    if (s == "HAAR_N") return DataSource::HAAR_N;
    throw InvalidArgument("unknown data source '" + s + "'");
}

/// First column of a Haar 2x2 unitary.
inline Qubit sample_haar_single_qubit(CounterRng& rng) {
    const CMatrix u = haar_unitary_matrix(2, rng);
    return {u(0, 0), u(1, 0)};
}

inline Qubit stabilizer_state(int label) {
    const double h = std::numbers::sqrt2 / 2;
    switch (label) {
        case 0: return {cplx(1), cplx(0)};
        case 1: return {cplx(0), cplx(1)};
        case 2: return {cplx(h), cplx(h)};
        case 3: return {cplx(h), cplx(-h)};
        case 4: return {cplx(h), cplx(0, h)};
        case 5: return {cplx(h), cplx(0, -h)};
        default: throw InvalidArgument("stabilizer_state: label must be in [0, 6)");
    }
}

/// Uniform over |0>, |1>, |+>, |->, |+i>, |-i>.
inline Qubit sample_stabilizer_single_qubit(CounterRng& rng) {
    return stabilizer_state(static_cast<int>(rng.below(6)));
}

struct ProductStateSpec {
    std::vector<Qubit> factors;
    std::vector<int> labels;  // stabilizer label per factor, or -1 for Haar

    int qubits() const { return static_cast<int>(factors.size()); }

    void validate(double tol = kNormTol) const {
        if (labels.size() != factors.size()) throw InvalidArgument("ProductStateSpec: label count mismatch");
        for (const auto& f : factors)
            if (std::abs(std::norm(f[0]) + std::norm(f[1]) - 1.0) > tol)
                throw InvalidArgument("ProductStateSpec: factor is not normalized");
    }

    StateVector assemble() const { return StateVector::product(factors); }
};

struct TrainingPair {
    std::optional<ProductStateSpec> factors;  // absent for entangled inputs
    StateVector input;
    StateVector output;
};

struct DatasetProvenance {
    PauliSumHamiltonian hamiltonian;
    TrotterConfig trotter;
    RngSeed seed;
    DataSource source = DataSource::HAAR1;
};

struct Dataset {
    int n = 0;
    std::vector<TrainingPair> pairs;
    DatasetProvenance provenance;

    std::size_t size() const { return pairs.size(); }
    bool has_factors() const {
        return std::all_of(pairs.begin(), pairs.end(), [](const TrainingPair& p) { return p.factors.has_value(); });
    }
};

inline ProductStateSpec sample_product_state(int n, DataSource source, CounterRng& rng) {
    ProductStateSpec spec;
    for (int q = 0; q < n; ++q) {
        if (source == DataSource::STABILIZER) {
            const int label = static_cast<int>(rng.below(6));
            spec.factors.push_back(stabilizer_state(label));
            spec.labels.push_back(label);
        } else {
            spec.factors.push_back(sample_haar_single_qubit(rng));
            spec.labels.push_back(-1);
        }
    }
    return spec;
}

/// Training pair j uses the stream derive_seed(seed, j).
inline TrainingPair make_training_pair(const PauliSumHamiltonian& h, const TrotterConfig& cfg, DataSource source,
                                       RngSeed pair_seed) {
    const int n = h.qubits();
    CounterRng rng(pair_seed);
    TrainingPair p;
    if (source == DataSource::HAAR_N) {
        require_dense(n, "HAAR_N dataset");
        const CMatrix u = haar_unitary_matrix(dim_of(n), rng);
        p.input = StateVector(n, u.col(0), 1e-10);
    } else {
        p.factors = sample_product_state(n, source, rng);
        p.input = p.factors->assemble();
    }
    p.output = apply_trotter(p.input, h, cfg);
    return p;
}

inline Dataset generate_dataset(const PauliSumHamiltonian& h, const TrotterConfig& cfg, std::size_t N,
                                DataSource source, RngSeed seed) {
    detail::require(N >= 1, "generate_dataset: N must be >= 1");
    cfg.validate();
    require_state(h.qubits(), "generate_dataset");
    if (source == DataSource::HAAR_N) require_dense(h.qubits(), "HAAR_N dataset");
    Dataset d;
    d.n = h.qubits();
    d.provenance = {h, cfg, seed, source};
    d.pairs.resize(N);
    parallel_for(N, [&](std::size_t j) { d.pairs[j] = make_training_pair(h, cfg, source, derive_seed(seed, j)); });
    return d;
}

/// Checks every output against the Trotter image of its input within `tol`.
inline void revalidate_dataset(const Dataset& d, double tol = 1e-10) {
    const auto& prov = d.provenance;
    if (prov.hamiltonian.qubits() != d.n) throw FormatError("dataset: hamiltonian n does not match dataset n");
    for (std::size_t j = 0; j < d.pairs.size(); ++j) {
        const auto& p = d.pairs[j];
        if (p.input.qubits() != d.n || p.output.qubits() != d.n) throw FormatError("dataset: pair n mismatch");
        if (p.factors) {
            const CVector assembled = p.factors->assemble().amplitudes();
            if ((assembled - p.input.amplitudes()).norm() > tol)
                throw FormatError("dataset: pair " + std::to_string(j) + " input does not match its factors");
        }
        const CVector expect = apply_trotter(p.input, prov.hamiltonian, prov.trotter).amplitudes();
        if ((expect - p.output.amplitudes()).norm() > tol)
            throw FormatError("dataset: pair " + std::to_string(j) + " output is not U_dt applied to its input");
    }
}

// ---------------------------------------------------------------------------
// File format

inline constexpr int kDatasetFormatVersion = 1;

namespace detail {

inline nlohmann::json complex_array(const CVector& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v[i].real(), v[i].imag()});
    return a;
}

inline CVector complex_vector(const nlohmann::json& a) {
    CVector v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& e = a.at(i);
        if (!e.is_array() || e.size() != 2) throw FormatError("expected [re, im] pair");
        v[static_cast<Eigen::Index>(i)] = cplx(e.at(0).get<double>(), e.at(1).get<double>());
    }
    return v;
}

}  // namespace detail

inline nlohmann::json to_json(const Dataset& d) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : d.pairs) {
        nlohmann::json jp;
        if (p.factors) {
            nlohmann::json fs = nlohmann::json::array();
            for (std::size_t q = 0; q < p.factors->factors.size(); ++q) {
                const auto& f = p.factors->factors[q];
                fs.push_back({{"amplitudes", {{f[0].real(), f[0].imag()}, {f[1].real(), f[1].imag()}}},
                              {"label", p.factors->labels[q]}});
            }
            jp["factors"] = fs;
        } else {
            jp["input"] = detail::complex_array(p.input.amplitudes());
        }
        jp["output"] = detail::complex_array(p.output.amplitudes());
        pairs.push_back(jp);
    }
    return {{"format_version", kDatasetFormatVersion},
            {"n", d.n},
            {"N", d.pairs.size()},
            {"source", to_string(d.provenance.source)},
            {"hamiltonian", to_json(d.provenance.hamiltonian)},
            {"trotter", to_json(d.provenance.trotter)},
            {"seed", d.provenance.seed.value},
            {"pairs", pairs}};
}

inline Dataset dataset_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format_version").get<int>() != kDatasetFormatVersion)
            throw FormatError("dataset: unsupported format_version");
        Dataset d;
        d.n = j.at("n").get<int>();
        if (d.n < 1) throw FormatError("dataset: n must be >= 1");
        d.provenance.source = data_source_from_string(j.at("source").get<std::string>());
        d.provenance.hamiltonian = hamiltonian_from_json(j.at("hamiltonian"));
        d.provenance.trotter = trotter_from_json(j.at("trotter"));
        d.provenance.seed = RngSeed{j.at("seed").get<std::uint64_t>()};
        const auto& pairs = j.at("pairs");
        if (pairs.size() != j.at("N").get<std::size_t>()) throw FormatError("dataset: N does not match pair count");
        for (const auto& jp : pairs) {
            TrainingPair p;
            if (jp.contains("factors")) {
                ProductStateSpec spec;
                for (const auto& f : jp.at("factors")) {
                    const CVector a = detail::complex_vector(f.at("amplitudes"));
                    if (a.size() != 2) throw FormatError("dataset: factor must have two amplitudes");
                    spec.factors.push_back({a[0], a[1]});
                    spec.labels.push_back(f.at("label").get<int>());
                }
                if (spec.qubits() != d.n) throw FormatError("dataset: factor count does not match n");
                spec.validate();
                p.input = spec.assemble();
                p.factors = std::move(spec);
            } else {
                p.input = StateVector(d.n, detail::complex_vector(jp.at("input")));
            }
            p.output = StateVector(d.n, detail::complex_vector(jp.at("output")));
            d.pairs.push_back(std::move(p));
        }
        if (d.pairs.empty()) throw FormatError("dataset: no pairs");
        revalidate_dataset(d);
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("dataset: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("dataset: ") + e.what());
    }
}

inline void save_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
    out << j.dump(1) << '\n';
    if (!out) throw std::ios_base::failure("write failed: " + path.string());
}

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

inline void save_dataset(const Dataset& d, const std::filesystem::path& path) { save_json_file(to_json(d), path); }

inline Dataset load_dataset(const std::filesystem::path& path) { return dataset_from_json(load_json_file(path)); }

}  // namespace reff
