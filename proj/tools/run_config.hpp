#pragma once

// Run configuration for the command-line runner: strict JSON schema with
// defaults, unknown keys rejected.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "reff/reff.hpp"

namespace reff::cli {

struct BoundsSettings {
    double delta = 0.05;
    double gen_constant = 1.0;
    double M0 = 10;
    double eps_target = 0.01;
};

struct GrowthSettings {
    bool enabled = false;
    GrowthConfig config;
};

/// Overrides for the bundled reproduction recipes. Empty means recipe default.
struct ReproSettings {
    std::optional<int> runs;
    std::vector<int> sizes;
    std::optional<int> M_max;
};

struct RunConfig {
    Model model = Model::XY;
    int n = 4;
    bool periodic = false;
    unsigned threads = 0;
    TrotterConfig trotter;
    GateKind ansatz_kind = GateKind::GIVENS;
    int layers = 0;
    DataSource source = DataSource::HAAR1;
    std::size_t N = 1;
    RngSeed data_seed{1};
    TrainConfig train;
    int infidelity_every = 10;  // 0 disables the 1 - F(dt) column of the trace
    GrowthSettings growth;
    FastForwardPlan eval;
    BoundsSettings bounds;
    VerifyConfig verify;
    ReproSettings repro;

    PauliSumHamiltonian hamiltonian() const { return build_model(model, n, periodic); }
    VffAnsatz ansatz() const { return make_ansatz(model, n, layers, ansatz_kind, trotter.dt); }
};

namespace detail {

using nlohmann::json;

class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + "must be an object");
    }

    /// Throws on any key that was never requested.
    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw ConfigError("unknown config key '" + prefix() + k + "'");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    template <class T>
    void get(const std::string& key, T& out) {
        if (!has(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config key '" + prefix() + key + "' has the wrong type");
        }
    }

    void get_unsigned(const std::string& key, std::uint64_t& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
            throw ConfigError("config key '" + prefix() + key + "' must be a non-negative integer");
        out = v.get<std::uint64_t>();
    }

    void get_count(const std::string& key, std::size_t& out) {
        std::uint64_t v = out;
        get_unsigned(key, v);
        out = static_cast<std::size_t>(v);
    }

    void get_int(const std::string& key, int& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError("config key '" + prefix() + key + "' must be an integer");
        out = v.get<int>();
    }

    void get_seed(const std::string& key, RngSeed& out) { get_unsigned(key, out.value); }

    template <class E, class Parse>
    void get_enum(const std::string& key, E& out, Parse parse) {
        std::string s;
        if (!has(key)) return;
        get(key, s);
        try {
            out = parse(s);
        } catch (const InvalidArgument& e) {
            throw ConfigError("config key '" + prefix() + key + "': " + e.what());
        }
    }

    std::optional<Reader> section(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return Reader(j_.at(key), prefix() + key);
    }

private:
    std::string prefix() const { return path_.empty() ? "" : path_ + "."; }
    std::string where() const { return path_.empty() ? "config " : "config section '" + path_ + "' "; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline void check(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    detail::Reader root(j, "");
    RunConfig c;
    root.get_enum("model", c.model, model_from_string);
    detail::check(c.model != Model::Custom, "model must be XY or HEISENBERG");
    root.get_int("n", c.n);
    root.get("periodic", c.periodic);
    int threads = 0;
    root.get_int("threads", threads);
    detail::check(threads >= 0, "threads must be >= 0");
    c.threads = static_cast<unsigned>(threads);
    detail::check(c.n >= 2, "n must be >= 2");

    if (auto s = root.section("trotter")) {
        s->get_int("order", c.trotter.order);
        s->get_int("r", c.trotter.trotter_number);
        s->get("dt", c.trotter.dt);
        s->finish();
    }
    detail::check(c.trotter.order == 1 || c.trotter.order == 2, "trotter.order must be 1 or 2");
    detail::check(c.trotter.trotter_number >= 1, "trotter.r must be >= 1");
    detail::check(c.trotter.dt > 0 && std::isfinite(c.trotter.dt), "trotter.dt must be positive");

    c.ansatz_kind = c.model == Model::XY ? GateKind::GIVENS : GateKind::SYM;
    c.layers = default_layers(c.n);
    if (auto s = root.section("ansatz")) {
        s->get_enum("kind", c.ansatz_kind, gate_kind_from_string);
        s->get_int("layers", c.layers);
        s->finish();
    }
    detail::check(c.ansatz_kind == GateKind::GIVENS || c.ansatz_kind == GateKind::SYM,
                  "ansatz.kind must be GIVENS or SYM");
    detail::check(c.layers >= 1, "ansatz.layers must be >= 1");

    if (auto s = root.section("data")) {
        s->get_enum("source", c.source, data_source_from_string);
        s->get_count("N", c.N);
        s->get_seed("seed", c.data_seed);
        s->finish();
    }
    detail::check(c.N >= 1, "data.N must be >= 1");

    auto& t = c.train;
    t.max_iters = 10000;
    if (auto s = root.section("train")) {
        s->get_enum("optimizer", t.optimizer, optimizer_from_string);
        s->get("rate", t.learning_rate);
        s->get("target_cost", t.target_cost);
        s->get_enum("cost_kind", t.cost_kind, cost_kind_from_string);
        s->get_int("max_iters", t.max_iters);
        s->get_seed("seed", t.seed);
        s->get("beta1", t.beta1);
        s->get("beta2", t.beta2);
        s->get("adam_eps", t.adam_eps);
        s->get("init_range", t.init_range);
        s->get("lr_decay", t.lr_decay);
        s->get_int("decay_patience", t.decay_patience);
        s->get("min_rate", t.min_learning_rate);
        s->get_int("restart_window", t.restart_window);
        s->get_int("max_restarts", t.max_restarts);
        s->get_int("infidelity_every", c.infidelity_every);
        s->finish();
    }
    try {
        t.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    detail::check(c.infidelity_every >= 0, "train.infidelity_every must be >= 0");

    if (auto s = root.section("growth")) {
        auto& g = c.growth.config;
        s->get("enabled", c.growth.enabled);
        s->get_count("initial_N", g.initial_N);
        s->get_count("step", g.step);
        s->get_count("max_N", g.max_N);
        s->get_count("validation_N", g.validation_N);
        s->get_int("plateau_window", g.plateau_window);
        s->get("validation_target", g.validation_target);
        s->finish();
        try {
            g.validate();
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }
    }

    auto& e = c.eval;
    e.dt = c.trotter.dt;
    if (auto s = root.section("eval")) {
        s->get_int("M_max", e.M_max);
        s->get_enum("reference", e.reference, reference_from_string);
        s->get_int("stride", e.stride);
        s->get_int("fractional_resolution", e.fractional_resolution);
        s->get_int("fractional_M_max", e.fractional_M_max);
        s->get_count("mc_samples", e.mc_samples);
        s->get_seed("mc_seed", e.mc_seed);
        s->finish();
    }
    try {
        e.validate();
    } catch (const InvalidArgument& ex) {
        throw ConfigError(ex.what());
    }
    detail::check(e.mc_samples >= 2, "eval.mc_samples must be >= 2");

    auto& b = c.bounds;
    if (auto s = root.section("bounds")) {
        s->get("delta", b.delta);
        s->get("gen_constant", b.gen_constant);
        s->get("M0", b.M0);
        s->get("eps_target", b.eps_target);
        s->finish();
    }
    detail::check(b.delta > 0 && b.delta <= 1, "bounds.delta must be in (0, 1]");
    detail::check(b.gen_constant >= 0, "bounds.gen_constant must be >= 0");
    detail::check(b.M0 >= 1, "bounds.M0 must be >= 1");
    detail::check(b.eps_target > 0, "bounds.eps_target must be > 0");

    auto& v = c.verify;
    if (auto s = root.section("verify")) {
        s->get_seed("seed", v.seed);
        s->get_count("samples", v.samples);
        s->get_count("sandwich_trials", v.sandwich_trials);
        s->get_count("local_samples", v.local_samples);
        s->get_count("subset_trials", v.subset_trials);
        s->get_count("power_trials", v.power_trials);
        s->get_int("power_M_max", v.power_M_max);
        s->get("eps_list", v.eps_list);
        s->finish();
    }
    detail::check(v.samples >= 1000, "verify.samples must be >= 1000");
    detail::check(v.local_samples >= 2 && v.sandwich_trials >= 1 && v.subset_trials >= 1 && v.power_trials >= 1,
                  "verify trial and sample counts must be positive");
    detail::check(v.power_M_max >= 1, "verify.power_M_max must be >= 1");
    detail::check(v.eps_list.size() >= 2, "verify.eps_list needs at least two values");

    if (auto s = root.section("repro")) {
        int runs = 0, m = 0;
        if (s->has("runs")) {
            s->get_int("runs", runs);
            detail::check(runs >= 1, "repro.runs must be >= 1");
            c.repro.runs = runs;
        }
        s->get("sizes", c.repro.sizes);
        for (int n : c.repro.sizes) detail::check(n >= 2, "repro.sizes entries must be >= 2");
        if (s->has("M_max")) {
            s->get_int("M_max", m);
            detail::check(m >= 1, "repro.M_max must be >= 1");
            c.repro.M_max = m;
        }
        s->finish();
    }
    root.finish();

    if (c.n > caps().state_qubits)
        throw CapExceeded("n=" + std::to_string(c.n) + " exceeds statevector cap " +
                          std::to_string(caps().state_qubits));
    return c;
}

inline nlohmann::json to_json(const RunConfig& c) {
    const auto& t = c.train;
    const auto& g = c.growth.config;
    const auto& e = c.eval;
    const auto& v = c.verify;
    nlohmann::json repro = nlohmann::json::object();
    if (c.repro.runs) repro["runs"] = *c.repro.runs;
    if (!c.repro.sizes.empty()) repro["sizes"] = c.repro.sizes;
    if (c.repro.M_max) repro["M_max"] = *c.repro.M_max;
    return {{"model", to_string(c.model)},
            {"n", c.n},
            {"periodic", c.periodic},
            {"threads", c.threads},
            {"trotter", to_json(c.trotter)},
            {"ansatz", {{"kind", to_string(c.ansatz_kind)}, {"layers", c.layers}}},
            {"data", {{"source", to_string(c.source)}, {"N", c.N}, {"seed", c.data_seed.value}}},
            {"train",
             {{"optimizer", to_string(t.optimizer)},
              {"rate", t.learning_rate},
              {"target_cost", t.target_cost},
              {"cost_kind", to_string(t.cost_kind)},
              {"max_iters", t.max_iters},
              {"seed", t.seed.value},
              {"beta1", t.beta1},
              {"beta2", t.beta2},
              {"adam_eps", t.adam_eps},
              {"init_range", t.init_range},
              {"lr_decay", t.lr_decay},
              {"decay_patience", t.decay_patience},
              {"min_rate", t.min_learning_rate},
              {"restart_window", t.restart_window},
              {"max_restarts", t.max_restarts},
              {"infidelity_every", c.infidelity_every}}},
            {"growth",
             {{"enabled", c.growth.enabled},
              {"initial_N", g.initial_N},
              {"step", g.step},
              {"max_N", g.max_N},
              {"validation_N", g.validation_N},
              {"plateau_window", g.plateau_window},
              {"validation_target", g.validation_target}}},
            {"eval",
             {{"M_max", e.M_max},
              {"reference", to_string(e.reference)},
              {"stride", e.stride},
              {"fractional_resolution", e.fractional_resolution},
              {"fractional_M_max", e.fractional_M_max},
              {"mc_samples", e.mc_samples},
              {"mc_seed", e.mc_seed.value}}},
            {"bounds",
             {{"delta", c.bounds.delta},
              {"gen_constant", c.bounds.gen_constant},
              {"M0", c.bounds.M0},
              {"eps_target", c.bounds.eps_target}}},
            {"verify",
             {{"seed", v.seed.value},
              {"samples", v.samples},
              {"sandwich_trials", v.sandwich_trials},
              {"local_samples", v.local_samples},
              {"subset_trials", v.subset_trials},
              {"power_trials", v.power_trials},
              {"power_M_max", v.power_M_max},
              {"eps_list", v.eps_list}}},
            {"repro", repro}};
}

inline RunConfig load_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = load_json_file(path);
    } catch (const FormatError& e) {
        throw ConfigError(e.what());
    }
    return parse_config(j);
}

}  // namespace reff::cli
