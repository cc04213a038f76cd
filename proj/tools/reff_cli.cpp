// reff_cli: data generation, training, evaluation, bound certification,
// identity verification and bundled reproduction runs.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace reff;
using namespace reff::cli;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr const char* kOutEnv = "REFF_OUT_DIR";

enum ExitCode { kOk = 0, kUnexpected = 1, kConfig = 2, kNumeric = 3, kOracle = 4, kCap = 5, kFileIo = 6 };

class OracleFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string num(const std::optional<double>& x) { return x ? num(*x) : ""; }

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Result files are staged in memory and written together once the run
/// succeeded, so a failing run leaves nothing behind.
class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

    void add(const std::string& name, std::string content) { files_[name] = std::move(content); }
    void add_json(const std::string& name, const json& j) { add(name, j.dump(1) + "\n"); }

    json listing() const {
        json out = json::object();
        for (const auto& [name, content] : files_) out[name] = hex(fnv1a(content));
        return out;
    }

    void write() const {
        for (const auto& [name, content] : files_) {
            const fs::path p = dir_ / name;
            fs::create_directories(p.parent_path());
            std::ofstream out(p, std::ios::binary);
            if (!out) throw std::ios_base::failure("cannot open " + p.string() + " for writing");
            out << content;
            if (!out) throw std::ios_base::failure("write failed: " + p.string());
        }
    }

    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::map<std::string, std::string> files_;
};

json manifest(const std::string& command, const RunConfig& cfg, const json& inputs, const Outputs& out) {
    json modules = json::object();
    for (const char* m : {"qsim", "hamiltonians", "ansatz", "data", "costs", "training", "bounds", "verify",
                          "evaluation", "cli"})
        modules[m] = kVersion;
    return {{"tool", "reff_cli"},
            {"version", kVersion},
            {"modules", modules},
            {"command", command},
            {"config", to_json(cfg)},
            {"seeds",
             {{"data", cfg.data_seed.value},
              {"train", cfg.train.seed.value},
              {"eval_mc", cfg.eval.mc_seed.value},
              {"verify", cfg.verify.seed.value}}},
            {"threads", num_threads()},
            {"inputs", inputs},
            {"outputs", out.listing()}};
}

void finish(const std::string& command, const RunConfig& cfg, const json& inputs, Outputs& out) {
    out.add_json("manifest.json", manifest(command, cfg, inputs, out));
    out.write();
}

json input_entry(const fs::path& p) { return {{"path", p.string()}, {"hash", hex(fnv1a(read_file(p)))}}; }

// ---------------------------------------------------------------------------
// Shared pieces

void require_same(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

Dataset load_matching_dataset(const fs::path& path, const RunConfig& cfg) {
    Dataset d = load_dataset(path);
    require_same(d.n == cfg.n, "dataset n does not match config n");
    require_same(d.provenance.trotter == cfg.trotter, "dataset Trotter settings do not match config");
    require_same(to_json(d.provenance.hamiltonian) == to_json(cfg.hamiltonian()),
                 "dataset Hamiltonian does not match config model");
    return d;
}

ParamFile load_matching_params(const fs::path& path, const RunConfig& cfg) {
    ParamFile p = params_from_json(load_json_file(path));
    require_same(p.ansatz.qubits() == cfg.n, "parameter file n does not match config n");
    require_same(p.ansatz.dt == cfg.trotter.dt, "parameter file dt does not match trotter.dt");
    return p;
}

std::string trace_csv(const TrainResult& r) {
    std::string s = "iter,cost,grad_norm,validation_cost,infidelity,wall_ms\n";
    for (const auto& rec : r.trace)
        s += std::to_string(rec.iter) + "," + num(rec.cost) + "," + num(rec.grad_norm) + "," +
             num(rec.validation_cost) + "," + num(rec.infidelity) + "," + num(rec.wall_ms) + "\n";
    return s;
}

std::string series_csv(const std::vector<SeriesPoint>& series) {
    std::string s = "t,M,fid_vs_trotter,fid_vs_exact,stderr\n";
    for (const auto& p : series)
        s += num(p.t) + "," + num(p.M) + "," + num(p.fid_vs_trotter) + "," + num(p.fid_vs_exact) + "," +
             num(p.stderr_mean) + "\n";
    return s;
}

json cost_record(const CostValue& c, const std::string& inputs_hash) {
    json j = to_json(c);
    j["inputs_hash"] = inputs_hash;
    return j;
}

std::string params_hash(const ParamFile& p) { return hex(fnv1a(to_json(p).dump())); }

struct Trained {
    TrainResult result;
    std::optional<GrownResult> grown;
    double seconds = 0;
};

/// 1 - F(U_dt, V_dt) every cfg.infidelity_every iterations when n fits the dense cap.
TrainHooks infidelity_hooks(const RunConfig& cfg, const VffAnsatz& a, const PauliSumHamiltonian& h) {
    TrainHooks hooks;
    if (cfg.infidelity_every == 0 || cfg.n > caps().dense_qubits) return hooks;
    auto u = std::make_shared<DenseOperator>(trotter_unitary(h, cfg.trotter));
    hooks.infidelity = [u, &a](std::span<const double> th, std::span<const double> ga) {
        return 1.0 - average_fidelity(*u, vff_unitary(a, th, ga, a.dt));
    };
    hooks.every = cfg.infidelity_every;
    return hooks;
}

Trained run_training(const RunConfig& cfg, const VffAnsatz& a, const PauliSumHamiltonian& h, const Dataset& data) {
    const auto t0 = std::chrono::steady_clock::now();
    Trained out;
    const TrainHooks hooks = infidelity_hooks(cfg, a, h);
    if (cfg.growth.enabled) {
        out.grown = reff_train_grown(a, h, cfg.trotter, cfg.source, cfg.data_seed, cfg.train, cfg.growth.config, hooks);
        out.result = out.grown->train;
    } else {
        out.result = reff_train(a, data, cfg.train, hooks);
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

json train_summary(const Trained& t) {
    const auto& r = t.result;
    json j{{"converged", r.converged},   {"best_cost", r.best_cost}, {"best_iter", r.best_iter},
           {"iterations", r.iterations}, {"restarts", r.restarts},   {"seconds", t.seconds}};
    if (t.grown) {
        json events = json::array();
        for (const auto& e : t.grown->growth)
            events.push_back({{"iter", e.iter}, {"N", e.N}, {"train_cost", e.train_cost},
                              {"validation_cost", e.validation_cost}});
        j["growth"] = {{"events", events},
                       {"final_N", t.grown->final_N},
                       {"generalized_at", t.grown->generalized_at ? json(*t.grown->generalized_at) : json(nullptr)},
                       {"exhausted", t.grown->exhausted}};
    }
    return j;
}

double infidelity_dt(const PauliSumHamiltonian& h, const TrotterConfig& tc, const ParamFile& p) {
    return 1.0 - average_fidelity(trotter_unitary(h, tc), vff_unitary(p.ansatz, p.theta, p.gamma, p.ansatz.dt));
}

/// Costs and bound reports at M = bounds.M0 for trained parameters.
json certify(const RunConfig& cfg, const ParamFile& p, const std::optional<Dataset>& data) {
    const auto h = cfg.hamiltonian();
    const auto& a = p.ansatz;
    const std::string ph = params_hash(p);
    const double K = a.theta_count() + a.gamma_count();
    const double N = data ? static_cast<double>(data->size()) : static_cast<double>(cfg.N);
    const double M0 = cfg.bounds.M0;
    json costs = json::array(), reports = json::array();
    json out;

    std::optional<double> eps;
    if (cfg.n <= caps().dense_qubits) eps = trotter_error(h, cfg.trotter);
    BoundInputs in;
    in.n = cfg.n;
    in.M = M0;
    in.trotter_eps = eps.value_or(0.0);
    in.K = K;
    in.N = N;
    in.delta = cfg.bounds.delta;
    in.gen_constant = cfg.bounds.gen_constant;

    if (data) {
        const std::string dh = ph + hex(fnv1a(to_json(*data).dump()));
        const auto g = cost_global_empirical(a, p.theta, p.gamma, a.dt, *data);
        const auto l = cost_local_empirical(a, p.theta, p.gamma, a.dt, *data);
        costs.push_back(cost_record(g, dh));
        costs.push_back(cost_record(l, dh));
        if (eps && data->has_factors()) {
            in.cost = g;
            reports.push_back(to_json(bound_product_global(in)));
            in.cost = l;
            reports.push_back(to_json(bound_product_local(in)));
        }
    }
    // Expected costs are exact, so their reports carry no generalization term.
    in.gen_constant = 0.0;
    if (cfg.n <= caps().dense_qubits) {
        const auto u = trotter_unitary(h, cfg.trotter);
        const auto v = vff_unitary(a, p.theta, p.gamma, a.dt);
        const auto chst = cost_hst(u, v);
        costs.push_back(cost_record(chst, ph));
        const auto ent = expected_entangled_global(u, v);
        costs.push_back(cost_record(ent, ph));
        in.cost = ent;
        reports.push_back(to_json(bound_entangled_global(in)));
        if (cfg.n <= caps().subset_qubits) {
            const auto pg = expected_product_global(u, v);
            costs.push_back(cost_record(pg, ph));
            in.cost = pg;
            reports.push_back(to_json(bound_product_global(in)));
        }
        const double d = std::pow(2.0, cfg.n);
        out["nested_exact"] = {{"M", M0}, {"trotter_eps", *eps}, {"lower_bound", bound_nested_exact(d, M0, *eps, chst.value)}};
        out["infidelity_dt"] = 1.0 - average_fidelity(u, v);
    }
    const auto remark = remark_threshold(cfg.bounds.eps_target, M0, eps.value_or(0.0), std::pow(2.0, cfg.n));
    const auto term = termination_threshold(cfg.bounds.eps_target, M0, eps.value_or(0.0), cfg.n);
    out["costs"] = costs;
    out["bounds"] = reports;
    out["trotter_eps"] = eps ? json(*eps) : json(nullptr);
    out["K"] = K;
    out["N"] = N;
    out["thresholds"] = {{"remark", {{"value", remark.value}, {"certifiable", remark.certifiable}}},
                         {"termination", {{"value", term.value}, {"certifiable", term.certifiable}}}};
    out["required_dataset_size"] = required_dataset_size(M0, K, cfg.bounds.eps_target);
    out["generalization_term"] = generalization_term(K, N, cfg.bounds.delta, cfg.bounds.gen_constant);
    return out;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_gen_data(const RunConfig& cfg, const fs::path& config_path, Outputs& out) {
    const Dataset d = generate_dataset(cfg.hamiltonian(), cfg.trotter, cfg.N, cfg.source, cfg.data_seed);
    out.add_json("dataset.json", to_json(d));
    finish("gen-data", cfg, {{"config", input_entry(config_path)}}, out);
    return kOk;
}

int cmd_train(const RunConfig& cfg, const fs::path& config_path, const std::optional<fs::path>& data_path,
              Outputs& out) {
    const auto h = cfg.hamiltonian();
    const auto a = cfg.ansatz();
    json inputs{{"config", input_entry(config_path)}};
    Dataset data;
    if (data_path) {
        if (cfg.growth.enabled) throw ConfigError("growth.enabled draws its own data; drop --data");
        data = load_matching_dataset(*data_path, cfg);
        inputs["data"] = input_entry(*data_path);
    } else {
        data = generate_dataset(h, cfg.trotter, cfg.N, cfg.source, cfg.data_seed);
        out.add_json("dataset.json", to_json(data));
    }
    const Trained t = run_training(cfg, a, h, data);
    const ParamFile p{a, t.result.theta, t.result.gamma};
    out.add_json("params.json", to_json(p));
    out.add("trace.csv", trace_csv(t.result));
    json result{{"train", train_summary(t)}};
    const std::string dh = params_hash(p) + hex(fnv1a(to_json(data).dump()));
    result["costs"] = {cost_record(cost_global_empirical(a, p.theta, p.gamma, a.dt, data), dh),
                       cost_record(cost_local_empirical(a, p.theta, p.gamma, a.dt, data), dh)};
    if (cfg.n <= caps().dense_qubits) result["infidelity_dt"] = infidelity_dt(h, cfg.trotter, p);
    out.add_json("result.json", result);
    finish("train", cfg, inputs, out);
    std::cout << "train: converged=" << t.result.converged << " best_cost=" << num(t.result.best_cost)
              << " iterations=" << t.result.iterations << "\n";
    return kOk;
}

int cmd_evaluate(const RunConfig& cfg, const fs::path& config_path, const fs::path& params_path,
                 const std::optional<fs::path>& data_path, Outputs& out) {
    const ParamFile p = load_matching_params(params_path, cfg);
    json inputs{{"config", input_entry(config_path)}, {"params", input_entry(params_path)}};
    std::optional<Dataset> data;
    if (data_path) {
        data = load_matching_dataset(*data_path, cfg);
        inputs["data"] = input_entry(*data_path);
    }
    const auto h = cfg.hamiltonian();
    const auto series = fidelity_series(p.ansatz, p.theta, p.gamma, h, cfg.trotter, cfg.eval);
    out.add("series.csv", series_csv(series));
    out.add_json("result.json", certify(cfg, p, data));
    finish("evaluate", cfg, inputs, out);
    return kOk;
}

int cmd_bounds(const RunConfig& cfg, const fs::path& config_path, const fs::path& params_path,
               const std::optional<fs::path>& data_path, Outputs& out) {
    const ParamFile p = load_matching_params(params_path, cfg);
    json inputs{{"config", input_entry(config_path)}, {"params", input_entry(params_path)}};
    std::optional<Dataset> data;
    if (data_path) {
        data = load_matching_dataset(*data_path, cfg);
        inputs["data"] = input_entry(*data_path);
    }
    const json r = certify(cfg, p, data);
    out.add_json("bounds.json", r);
    finish("bounds", cfg, inputs, out);
    for (const auto& b : r.at("bounds"))
        std::cout << b.at("kind").get<std::string>() << " M=" << num(cfg.bounds.M0)
                  << " lower_bound=" << num(b.at("lower_bound").get<double>()) << "\n";
    return kOk;
}

int cmd_verify(const RunConfig& cfg, const json& inputs, Outputs& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto reports = run_verify_suite(cfg.verify);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json all = json::array();
    bool pass = true;
    for (const auto& r : reports) {
        all.push_back(to_json(r));
        pass = pass && r.pass;
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << " entries=" << r.entries.size()
                  << " worst_slack=" << num(r.worst_slack) << (r.rerun ? " (rerun)" : "") << "\n";
    }
    out.add_json("verify.json", {{"pass", pass}, {"seconds", secs}, {"reports", all}});
    finish("verify", cfg, inputs, out);
    if (!pass) throw OracleFailure("verify: at least one identity failed");
    return kOk;
}

// ---------------------------------------------------------------------------
// Reproduction recipes

RunConfig fig2a_config() {
    RunConfig c = parse_config({{"model", "HEISENBERG"}, {"n", 4}, {"periodic", true}});
    c.N = 5;
    c.train.cost_kind = CostKind::EMP_GLOBAL;
    c.train.target_cost = 1e-8;
    c.train.max_iters = 40000;
    c.train.restart_window = 1000;
    c.train.max_restarts = 20;
    return c;
}

RunConfig fig2b_config(int n) {
    RunConfig c = parse_config({{"model", "XY"}, {"n", n}, {"periodic", false}});
    c.N = 1;
    c.train.cost_kind = CostKind::EMP_LOCAL;
    c.train.target_cost = 1e-12;
    c.train.max_iters = 10000;
    c.train.restart_window = 1000;
    c.train.max_restarts = 5;
    c.eval.M_max = 2000;
    c.eval.stride = 10;
    c.eval.reference = Reference::TROTTER;
    return c;
}

RunConfig figa2_config(int n) {
    RunConfig c = fig2a_config();
    c.n = n;
    c.layers = default_layers(n);
    c.growth.enabled = true;
    c.growth.config = GrowthConfig{1, 1, 12, 10, 2000, 1e-6};
    return c;
}

RunConfig figa3_config(int n) {
    RunConfig c = fig2b_config(n);
    c.trotter = {2, 10, 0.1};
    c.eval.M_max = 100;
    c.eval.stride = 1;
    c.eval.fractional_resolution = 4;
    c.eval.fractional_M_max = 10;
    c.eval.reference = Reference::BOTH;
    return c;
}

struct ReproRun {
    std::string dir;
    RunConfig cfg;
};

/// Trains one bundled configuration and stages its files under `dir`.
json repro_train(const ReproRun& run, Outputs& out, bool with_series) {
    const auto& cfg = run.cfg;
    set_num_threads(cfg.threads);
    const auto h = cfg.hamiltonian();
    const auto a = cfg.ansatz();
    const Dataset data = generate_dataset(h, cfg.trotter, cfg.N, cfg.source, cfg.data_seed);
    const Trained t = run_training(cfg, a, h, data);
    const ParamFile p{a, t.result.theta, t.result.gamma};
    out.add_json(run.dir + "/config.json", to_json(cfg));
    out.add_json(run.dir + "/params.json", to_json(p));
    out.add(run.dir + "/trace.csv", trace_csv(t.result));
    json s = train_summary(t);
    s["dir"] = run.dir;
    s["n"] = cfg.n;
    s["data_seed"] = cfg.data_seed.value;
    s["train_seed"] = cfg.train.seed.value;
    s["K"] = a.theta_count() + a.gamma_count();
    if (cfg.n <= caps().dense_qubits) s["infidelity_1"] = infidelity_dt(h, cfg.trotter, p);
    if (with_series) {
        const auto series = fidelity_series(a, p.theta, p.gamma, h, cfg.trotter, cfg.eval);
        out.add(run.dir + "/series.csv", series_csv(series));
        const auto& last = series.back();
        s["M_last"] = last.M;
        s["infidelity_last_vs_trotter"] = last.fid_vs_trotter ? json(1.0 - *last.fid_vs_trotter) : json(nullptr);
        s["infidelity_last_vs_exact"] = last.fid_vs_exact ? json(1.0 - *last.fid_vs_exact) : json(nullptr);
    }
    std::cerr << "repro " << run.dir << ": converged=" << t.result.converged << " best_cost=" << num(t.result.best_cost)
              << " iterations=" << t.result.iterations << " seconds=" << num(t.seconds) << "\n";
    return s;
}

int cmd_repro(const std::string& figure, const RunConfig& base, const json& inputs, Outputs& out) {
    const auto& rs = base.repro;
    std::vector<ReproRun> runs;
    bool with_series = false;
    auto seeded = [&](RunConfig c, int k) {
        c.threads = base.threads;
        c.data_seed = RngSeed{static_cast<std::uint64_t>(k)};
        c.train.seed = RngSeed{static_cast<std::uint64_t>(100 + k)};
        c.eval.dt = c.trotter.dt;
        if (rs.M_max) c.eval.M_max = *rs.M_max;
        c.eval.fractional_M_max = std::min(c.eval.fractional_M_max, c.eval.M_max);
        return c;
    };
    auto sizes_or = [&](std::vector<int> dflt) { return rs.sizes.empty() ? dflt : rs.sizes; };
    if (figure == "FIG2A") {
        for (int k = 1; k <= rs.runs.value_or(10); ++k) runs.push_back({"run" + std::to_string(k), seeded(fig2a_config(), k)});
    } else if (figure == "FIG2B") {
        with_series = true;
        for (int n : sizes_or({4, 6}))
            for (int k = 1; k <= rs.runs.value_or(1); ++k)
                runs.push_back({"n" + std::to_string(n) + "_run" + std::to_string(k), seeded(fig2b_config(n), k)});
    } else if (figure == "FIGA2") {
        for (int n : sizes_or({2, 3, 4}))
            for (int k = 1; k <= rs.runs.value_or(5); ++k)
                runs.push_back({"n" + std::to_string(n) + "_run" + std::to_string(k), seeded(figa2_config(n), k)});
    } else {
        with_series = true;
        for (int n : sizes_or({6}))
            for (int k = 1; k <= rs.runs.value_or(1); ++k)
                runs.push_back({"n" + std::to_string(n) + "_run" + std::to_string(k), seeded(figa3_config(n), k)});
    }
    for (const auto& r : runs) {
        if (r.cfg.n > caps().state_qubits || (r.cfg.n > caps().dense_qubits && r.cfg.eval.reference != Reference::TROTTER))
            throw CapExceeded("repro: n=" + std::to_string(r.cfg.n) + " exceeds a simulation cap");
    }

    json summary{{"figure", figure}, {"runs", json::array()}};
    std::string csv = "dir,n,K,data_seed,train_seed,converged,best_cost,iterations,restarts,seconds,infidelity_1";
    csv += figure == "FIGA2" ? ",generalized_at,final_N,exhausted\n" : "\n";
    for (const auto& r : runs) {
        const json s = repro_train(r, out, with_series);
        summary["runs"].push_back(s);
        csv += r.dir + "," + std::to_string(r.cfg.n) + "," + std::to_string(s.at("K").get<int>()) + "," +
               std::to_string(r.cfg.data_seed.value) + "," + std::to_string(r.cfg.train.seed.value) + "," +
               (s.at("converged").get<bool>() ? "1" : "0") + "," + num(s.at("best_cost").get<double>()) + "," +
               std::to_string(s.at("iterations").get<int>()) + "," + std::to_string(s.at("restarts").get<int>()) + "," +
               num(s.at("seconds").get<double>()) + "," +
               (s.contains("infidelity_1") ? num(s.at("infidelity_1").get<double>()) : "");
        if (figure == "FIGA2") {
            const auto& g = s.at("growth");
            csv += "," + (g.at("generalized_at").is_null() ? std::string() : std::to_string(g.at("generalized_at").get<std::size_t>())) +
                   "," + std::to_string(g.at("final_N").get<std::size_t>()) + "," +
                   (g.at("exhausted").get<bool>() ? "1" : "0");
        }
        csv += "\n";
    }
    out.add_json("summary.json", summary);
    out.add("summary.csv", csv);
    finish("repro " + figure, base, inputs, out);
    return kOk;
}

fs::path default_out_dir() {
    const char* env = std::getenv(kOutEnv);
    return env && *env ? fs::path(env) : fs::path("reff_out");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"REFF fast-forwarding simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::string config_path, data_path, params_path, out_dir, figure;
    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("-c,--config", config_path, "run configuration (JSON)");
        if (config_required) opt->required();
        sub->add_option("-o,--out", out_dir, std::string("output directory (default $") + kOutEnv + " or ./reff_out)");
    };
    auto* gen = app.add_subcommand("gen-data", "generate a training dataset");
    add_common(gen, true);
    auto* train = app.add_subcommand("train", "train the diagonal ansatz");
    add_common(train, true);
    train->add_option("-d,--data", data_path, "dataset file (generated from the config when omitted)");
    auto* evaluate = app.add_subcommand("evaluate", "fast-forward fidelity series and bounds");
    add_common(evaluate, true);
    evaluate->add_option("-p,--params", params_path, "trained parameter file")->required();
    evaluate->add_option("-d,--data", data_path, "dataset file for empirical costs");
    auto* bounds = app.add_subcommand("bounds", "fidelity lower bounds for trained parameters");
    add_common(bounds, true);
    bounds->add_option("-p,--params", params_path, "trained parameter file")->required();
    bounds->add_option("-d,--data", data_path, "dataset file for empirical costs");
    auto* verify = app.add_subcommand("verify", "Haar-integral and cost-relation oracle suite");
    add_common(verify, false);
    auto* repro = app.add_subcommand("repro", "desk-scale reproduction runs");
    add_common(repro, false);
    repro->add_option("figure", figure, "FIG2A, FIG2B, FIGA2 or FIGA3")
        ->required()
        ->check(CLI::IsMember({"FIG2A", "FIG2B", "FIGA2", "FIGA3"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    auto opt_path = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<fs::path>(s); };
    try {
        const bool have_config = !config_path.empty();
        const RunConfig cfg = have_config ? load_config(config_path) : parse_config(json::object());
        set_num_threads(cfg.threads);
        Outputs out(out_dir.empty() ? default_out_dir() : fs::path(out_dir));
        const json inputs = have_config ? json{{"config", input_entry(config_path)}} : json::object();

        if (gen->parsed()) return cmd_gen_data(cfg, config_path, out);
        if (train->parsed()) return cmd_train(cfg, config_path, opt_path(data_path), out);
        if (evaluate->parsed()) return cmd_evaluate(cfg, config_path, params_path, opt_path(data_path), out);
        if (bounds->parsed()) return cmd_bounds(cfg, config_path, params_path, opt_path(data_path), out);
        if (verify->parsed()) return cmd_verify(cfg, inputs, out);
        return cmd_repro(figure, cfg, inputs, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kConfig;
    } catch (const NumericFailure& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kNumeric;
    } catch (const OracleFailure& e) {
        std::cerr << e.what() << "\n";
        return kOracle;
    } catch (const CapExceeded& e) {
        std::cerr << "resource cap: " << e.what() << "\n";
        return kCap;
    } catch (const FormatError& e) {
        std::cerr << "file error: " << e.what() << "\n";
        return kFileIo;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "file error: " << e.what() << "\n";
        return kFileIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "file error: " << e.what() << "\n";
        return kFileIo;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return kUnexpected;
    }
}
