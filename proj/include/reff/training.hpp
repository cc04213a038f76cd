#pragma once

// Parameter-shift gradients, finite-difference oracle, optimizers and the
// REFF training loop (fixed and growing datasets).

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reff/ansatz.hpp"
#include "reff/bounds.hpp"
#include "reff/costs.hpp"
#include "reff/data.hpp"
#include "reff/parallel.hpp"

namespace reff {

// ---------------------------------------------------------------------------
// Gradients

namespace detail {

inline double split_cost(const VffAnsatz& a, std::span<const double> tl, std::span<const double> phi,
                         std::span<const double> tr, const Dataset& data, CostKind kind) {
    return empirical_cost_raw(a, {tl, phi, tr}, data, kind, false);
}

/// d/dx of f at x given f(x + s) - f(x - s) evaluations via `diff(s)`.
template <typename Diff>
double shift_rule(SlotSpectrum spec, Diff diff) {
    constexpr double half_pi = std::numbers::pi / 2;
    if (spec == SlotSpectrum::Single) return 0.5 * diff(half_pi);
    // Generator gaps {1, 2}: combine the +-pi/2 and +-pi/4 differences.
    constexpr double quarter_pi = std::numbers::pi / 4;
    return 0.5 * (1.0 - std::numbers::sqrt2) * diff(half_pi) + diff(quarter_pi);
}

inline void check_cost_kind(CostKind kind) {
    if (kind != CostKind::EMP_GLOBAL && kind != CostKind::EMP_LOCAL)
        throw InvalidArgument("gradient: cost kind must be EMP_GLOBAL or EMP_LOCAL");
}

}  // namespace detail

/// Partial derivative in theta_l: shifts of the W occurrence plus shifts of the W^dagger occurrence.
inline double gradient_theta(const VffAnsatz& a, std::span<const double> theta, std::span<const double> gamma,
                             double t, const Dataset& data, int l, CostKind kind = CostKind::EMP_GLOBAL) {
    a.check(theta, gamma);
    detail::check_cost_kind(kind);
    if (l < 0 || l >= a.theta_count()) throw InvalidArgument("gradient_theta: slot out of range");
    const auto phi = detail::scaled(gamma, a.time_scale(t));
    std::vector<double> plus(theta.begin(), theta.end()), minus = plus;
    const auto li = static_cast<std::size_t>(l);
    auto diff = [&](double s) {
        plus[li] = theta[li] + s;
        minus[li] = theta[li] - s;
        const double left = detail::split_cost(a, plus, phi, theta, data, kind) -
                            detail::split_cost(a, minus, phi, theta, data, kind);
        const double right = detail::split_cost(a, theta, phi, plus, data, kind) -
                             detail::split_cost(a, theta, phi, minus, data, kind);
        return left + right;
    };
    return detail::shift_rule(a.w.spectrum(l), diff);
}

/// Partial derivative in gamma_l. D sees the angle (t/dt) gamma_l, hence the chain factor.
inline double gradient_gamma(const VffAnsatz& a, std::span<const double> theta, std::span<const double> gamma,
                             double t, const Dataset& data, int l, CostKind kind = CostKind::EMP_GLOBAL) {
    a.check(theta, gamma);
    detail::check_cost_kind(kind);
    if (l < 0 || l >= a.gamma_count()) throw InvalidArgument("gradient_gamma: slot out of range");
    const double s = a.time_scale(t);
    const auto phi = detail::scaled(gamma, s);
    std::vector<double> plus = phi, minus = phi;
    const auto li = static_cast<std::size_t>(l);
    auto diff = [&](double shift) {
        plus[li] = phi[li] + shift;
        minus[li] = phi[li] - shift;
        return detail::split_cost(a, theta, plus, theta, data, kind) -
               detail::split_cost(a, theta, minus, theta, data, kind);
    };
    return s * detail::shift_rule(a.d.spectrum(l), diff);
}

namespace detail {

/// One gate of V = W D W^dagger in application order: W^dagger gates (block 0,
/// reversed and adjoint), then D (block 1), then W (block 2).
struct GateOccurrence {
    const GateSpec* gate;
    int block;
    int gate_index;
};

inline std::vector<GateOccurrence> vff_sequence(const VffAnsatz& a) {
    std::vector<GateOccurrence> seq;
    const auto& wg = a.w.gates();
    for (std::size_t i = wg.size(); i-- > 0;) seq.push_back({&wg[i], 0, static_cast<int>(i)});
    for (std::size_t i = 0; i < a.d.gates().size(); ++i) seq.push_back({&a.d.gates()[i], 1, static_cast<int>(i)});
    for (std::size_t i = 0; i < wg.size(); ++i) seq.push_back({&wg[i], 2, static_cast<int>(i)});
    return seq;
}

inline CMatrix occurrence_matrix(const GateOccurrence& o, std::span<const double> params) {
    CMatrix m = gate_matrix(*o.gate, params);
    if (o.block == 0) m.adjointInPlace();
    return m;
}

/// Parameter-shift gradient with cached partial products. Each shifted cost
/// differs from the base circuit in one gate, so states on either side of
/// that gate are computed once per pair and reused.
inline std::vector<double> shift_gradient_cached(const VffAnsatz& a, std::span<const double> theta,
                                                 std::span<const double> phi, double chain, const Dataset& data,
                                                 CostKind kind) {
    const int n = a.qubits();
    const auto seq = vff_sequence(a);
    const std::size_t K = seq.size();
    std::vector<CMatrix> mats(K);
    for (std::size_t k = 0; k < K; ++k) mats[k] = occurrence_matrix(seq[k], seq[k].block == 1 ? phi : theta);

    // occurrences[p] lists sequence positions whose gate carries parameter p.
    const std::size_t nt = theta.size(), np = nt + phi.size();
    std::vector<std::vector<std::size_t>> occurrences(np);
    for (std::size_t k = 0; k < K; ++k)
        for (int s : seq[k].gate->slots)
            occurrences[(seq[k].block == 1 ? nt : 0) + static_cast<std::size_t>(s)].push_back(k);

    std::vector<double> grad(np, 0.0);
    const double inv_n = 1.0 / static_cast<double>(data.size());
    const bool global = kind == CostKind::EMP_GLOBAL;
    for (const auto& pair : data.pairs) {
        if (!global && !pair.factors) throw InvalidArgument("local cost requires datasets with single-qubit factors");
        // back[k] = (G_{K-1} ... G_k)^dagger Phi, fwd[k] = G_{k-1} ... G_0 Psi
        std::vector<CVector> back(K + 1), fwd;
        back[K] = pair.output.amplitudes();
        for (std::size_t k = K; k-- > 0;) {
            back[k] = back[k + 1];
            apply_matrix_inplace(back[k], n, mats[k].adjoint(), seq[k].gate->targets);
        }
        if (global) {
            fwd.resize(K + 1);
            fwd[0] = pair.input.amplitudes();
            for (std::size_t k = 0; k < K; ++k) {
                fwd[k + 1] = fwd[k];
                apply_matrix_inplace(fwd[k + 1], n, mats[k], seq[k].gate->targets);
            }
        }
        // Cost of the circuit with gate k replaced by m.
        auto shifted_cost = [&](std::size_t k, const CMatrix& m) {
            if (global) {
                CVector v = fwd[k];
                apply_matrix_inplace(v, n, m, seq[k].gate->targets);
                return 1.0 - std::norm(back[k + 1].dot(v));
            }
            CVector chi = back[k + 1];
            apply_matrix_inplace(chi, n, m.adjoint(), seq[k].gate->targets);
            for (std::size_t j = k; j-- > 0;) apply_matrix_inplace(chi, n, mats[j].adjoint(), seq[j].gate->targets);
            return local_term(chi, pair.factors->factors);
        };
        parallel_for(np, [&](std::size_t p) {
            const bool is_gamma = p >= nt;
            const int slot = static_cast<int>(is_gamma ? p - nt : p);
            const ParamCircuit& circ = is_gamma ? a.d : a.w;
            std::span<const double> base = is_gamma ? phi : theta;
            std::vector<double> shifted(base.begin(), base.end());
            double g = 0.0;
            for (std::size_t k : occurrences[p]) {
                auto diff = [&](double s) {
                    shifted[static_cast<std::size_t>(slot)] = base[static_cast<std::size_t>(slot)] + s;
                    const double fp = shifted_cost(k, occurrence_matrix(seq[k], shifted));
                    shifted[static_cast<std::size_t>(slot)] = base[static_cast<std::size_t>(slot)] - s;
                    const double fm = shifted_cost(k, occurrence_matrix(seq[k], shifted));
                    shifted[static_cast<std::size_t>(slot)] = base[static_cast<std::size_t>(slot)];
                    return fp - fm;
                };
                g += shift_rule(circ.spectrum(slot), diff);
            }
            grad[p] += inv_n * (is_gamma ? chain * g : g);
        });
    }
    return grad;
}

}  // namespace detail

/// All theta partials followed by all gamma partials. Same shift rules as
/// gradient_theta / gradient_gamma, evaluated with cached partial states.
inline std::vector<double> full_gradient(const VffAnsatz& a, std::span<const double> theta,
                                         std::span<const double> gamma, double t, const Dataset& data,
                                         CostKind kind = CostKind::EMP_GLOBAL) {
    a.check(theta, gamma);
    detail::check_cost_kind(kind);
    if (data.pairs.empty()) throw InvalidArgument("full_gradient: empty dataset");
    if (data.n != a.qubits()) throw InvalidArgument("full_gradient: dataset n does not match ansatz");
    const double s = a.time_scale(t);
    const auto phi = detail::scaled(gamma, s);
    std::vector<double> g = detail::shift_gradient_cached(a, theta, phi, s, data, kind);
    for (double x : g)
        if (!std::isfinite(x)) throw NumericFailure("full_gradient: non-finite component");
    return g;
}

/// Central finite differences of the same cost, same layout as full_gradient.
inline std::vector<double> finite_difference_gradient(const VffAnsatz& a, std::span<const double> theta,
                                                      std::span<const double> gamma, double t, const Dataset& data,
                                                      CostKind kind = CostKind::EMP_GLOBAL, double h = 1e-5) {
    a.check(theta, gamma);
    const std::size_t nt = theta.size(), ng = gamma.size();
    std::vector<double> g(nt + ng);
    parallel_for(g.size(), [&](std::size_t k) {
        std::vector<double> th(theta.begin(), theta.end()), ga(gamma.begin(), gamma.end());
        double& x = k < nt ? th[k] : ga[k - nt];
        const double x0 = x;
        auto eval = [&] {
            const auto phi = detail::scaled(ga, a.time_scale(t));
            return detail::split_cost(a, th, phi, th, data, kind);
        };
        x = x0 + h;
        const double fp = eval();
        x = x0 - h;
        const double fm = eval();
        g[k] = (fp - fm) / (2 * h);
    });
    return g;
}

// ---------------------------------------------------------------------------
// Training configuration and trace

enum class Optimizer { GD, ADAM };

inline std::string to_string(Optimizer o) { return o == Optimizer::GD ? "GD" : "ADAM"; }

inline Optimizer optimizer_from_string(const std::string& s) {
    if (s == "GD") return Optimizer::GD;
    if (s == "ADAM") return Optimizer::ADAM;
    throw InvalidArgument("unknown optimizer '" + s + "'");
}

struct TrainConfig {
    Optimizer optimizer = Optimizer::ADAM;
    double learning_rate = 0.05;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int max_iters = 1000;
    CostKind cost_kind = CostKind::EMP_GLOBAL;
    double target_cost = 1e-8;
    RngSeed seed{1};
    double init_range = 0.1;  // theta, gamma ~ uniform(-init_range, init_range)
    // Learning rate is multiplied by lr_decay when the best cost has not
    // improved for decay_patience iterations. lr_decay = 1 disables it.
    double lr_decay = 0.8;
    int decay_patience = 50;
    double min_learning_rate = 1e-6;
    // Restart from fresh random parameters (stream derive_seed(seed, restart))
    // when the best cost improved by less than a factor 2 over restart_window
    // iterations. max_restarts = 0 disables restarts.
    int restart_window = 2000;
    int max_restarts = 0;

    void validate() const {
        if (!(target_cost >= 0)) throw InvalidArgument("TrainConfig: target_cost must be >= 0");
        if (max_iters < 1) throw InvalidArgument("TrainConfig: max_iters must be >= 1");
        if (!(learning_rate > 0)) throw InvalidArgument("TrainConfig: learning_rate must be > 0");
        if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw InvalidArgument("TrainConfig: bad betas");
        if (!(adam_eps > 0)) throw InvalidArgument("TrainConfig: adam_eps must be > 0");
        if (!(lr_decay > 0 && lr_decay <= 1)) throw InvalidArgument("TrainConfig: lr_decay must be in (0, 1]");
        if (decay_patience < 1) throw InvalidArgument("TrainConfig: decay_patience must be >= 1");
        if (restart_window < 1 || max_restarts < 0) throw InvalidArgument("TrainConfig: bad restart settings");
        if (cost_kind != CostKind::EMP_GLOBAL && cost_kind != CostKind::EMP_LOCAL)
            throw InvalidArgument("TrainConfig: cost_kind must be EMP_GLOBAL or EMP_LOCAL");
    }
};

struct TraceRecord {
    int iter = 0;
    double cost = 0.0;
    double best_cost = 0.0;
    std::optional<double> grad_norm;
    std::optional<double> validation_cost;
    std::optional<double> infidelity;
    double wall_ms = 0.0;
    std::size_t dataset_size = 0;
    bool restarted = false;  // parameters were re-drawn after this record
};

struct TrainResult {
    std::vector<double> theta;
    std::vector<double> gamma;
    double best_cost = 1.0;
    int best_iter = 0;
    int iterations = 0;
    int restarts = 0;
    bool converged = false;
    std::vector<TraceRecord> trace;
};

/// Optional per-iteration diagnostics. Either callback may be empty.
struct TrainHooks {
    std::function<double(std::span<const double>, std::span<const double>)> validation;
    std::function<double(std::span<const double>, std::span<const double>)> infidelity;
    int every = 1;
};

inline std::pair<std::vector<double>, std::vector<double>> random_init(const VffAnsatz& a, RngSeed seed,
                                                                       double range) {
    CounterRng rng(seed);
    std::vector<double> theta(static_cast<std::size_t>(a.theta_count()));
    std::vector<double> gamma(static_cast<std::size_t>(a.gamma_count()));
    for (auto& x : theta) x = rng.uniform(-range, range);
    for (auto& x : gamma) x = rng.uniform(-range, range);
    return {theta, gamma};
}

/// Stepwise optimizer over (theta, gamma) at t = dt. The dataset may be
/// swapped between steps (dataset growth).
class Trainer {
public:
    Trainer(const VffAnsatz& a, const Dataset& data, TrainConfig cfg, std::vector<double> theta,
            std::vector<double> gamma)
        : a_(a), data_(&data), cfg_(cfg), theta_(std::move(theta)), gamma_(std::move(gamma)), rate_(cfg.learning_rate) {
        cfg_.validate();
        a_.check(theta_, gamma_);
        const std::size_t p = theta_.size() + gamma_.size();
        m_.assign(p, 0.0);
        v_.assign(p, 0.0);
        best_theta_ = theta_;
        best_gamma_ = gamma_;
        start_ = std::chrono::steady_clock::now();
    }

    void set_dataset(const Dataset& data) {
        data_ = &data;
        best_cost_ = std::numeric_limits<double>::infinity();
        converged_ = false;
    }

    double cost() const {
        const CostValue c = empirical_cost(a_, theta_, gamma_, a_.dt, *data_, cfg_.cost_kind);
        return c.raw;
    }

    /// Evaluates the current point, records it, and takes one step unless the
    /// target is met or the iteration budget is spent. Returns false when done.
    bool step(const TrainHooks& hooks = {}) {
        TraceRecord rec;
        rec.iter = iter_;
        rec.cost = cost();
        rec.dataset_size = data_->size();
        if (!std::isfinite(rec.cost)) throw NumericFailure("training: non-finite cost at iteration " + std::to_string(iter_));
        if (rec.cost < best_cost_) {
            best_cost_ = rec.cost;
            best_theta_ = theta_;
            best_gamma_ = gamma_;
            best_iter_ = iter_;
            since_improvement_ = 0;
        } else if (++since_improvement_ >= cfg_.decay_patience) {
            rate_ = std::max(cfg_.min_learning_rate, rate_ * cfg_.lr_decay);
            since_improvement_ = 0;
        }
        rec.best_cost = best_cost_;
        const bool evaluate = hooks.every > 0 && iter_ % hooks.every == 0;
        if (evaluate && hooks.validation) rec.validation_cost = hooks.validation(theta_, gamma_);
        if (evaluate && hooks.infidelity) rec.infidelity = hooks.infidelity(theta_, gamma_);

        const bool done = rec.cost <= cfg_.target_cost || iter_ >= cfg_.max_iters;
        if (rec.cost <= cfg_.target_cost) converged_ = true;
        if (!done && stagnated()) {
            restart();
            rec.restarted = true;
            ++iter_;
        } else if (!done) {
            const auto g = full_gradient(a_, theta_, gamma_, a_.dt, *data_, cfg_.cost_kind);
            double norm2 = 0.0;
            for (double x : g) norm2 += x * x;
            rec.grad_norm = std::sqrt(norm2);
            update(g);
            ++iter_;
        }
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
        trace_.push_back(rec);
        last_ = rec;
        return !done;
    }

    TrainResult result() const {
        TrainResult r;
        r.theta = best_theta_;
        r.gamma = best_gamma_;
        r.best_cost = best_cost_;
        r.best_iter = best_iter_;
        r.iterations = iter_;
        r.restarts = restarts_;
        r.converged = converged_;
        r.trace = trace_;
        return r;
    }

    const TraceRecord& last() const { return last_; }
    std::span<const double> theta() const { return theta_; }
    std::span<const double> gamma() const { return gamma_; }
    int iteration() const { return iter_; }
    double learning_rate() const { return rate_; }
    void reset_learning_rate() {
        rate_ = cfg_.learning_rate;
        since_improvement_ = 0;
    }

private:
    bool stagnated() {
        if (restarts_ >= cfg_.max_restarts) return false;
        if (iter_ - window_iter_ < cfg_.restart_window) return false;
        const bool stuck = best_cost_ > 0.5 * window_best_;
        window_iter_ = iter_;
        window_best_ = best_cost_;
        return stuck;
    }

    void restart() {
        ++restarts_;
        auto [theta, gamma] = random_init(a_, derive_seed(cfg_.seed, static_cast<std::uint64_t>(restarts_)), cfg_.init_range);
        theta_ = std::move(theta);
        gamma_ = std::move(gamma);
        std::fill(m_.begin(), m_.end(), 0.0);
        std::fill(v_.begin(), v_.end(), 0.0);
        adam_t_ = 0;
        rate_ = cfg_.learning_rate;
        since_improvement_ = 0;
        window_best_ = std::numeric_limits<double>::infinity();
    }

    void update(const std::vector<double>& g) {
        const std::size_t nt = theta_.size();
        auto param = [&](std::size_t k) -> double& { return k < nt ? theta_[k] : gamma_[k - nt]; };
        if (cfg_.optimizer == Optimizer::GD) {
            for (std::size_t k = 0; k < g.size(); ++k) param(k) -= rate_ * g[k];
            return;
        }
        ++adam_t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, adam_t_);
        const double c2 = 1.0 - std::pow(cfg_.beta2, adam_t_);
        for (std::size_t k = 0; k < g.size(); ++k) {
            m_[k] = cfg_.beta1 * m_[k] + (1 - cfg_.beta1) * g[k];
            v_[k] = cfg_.beta2 * v_[k] + (1 - cfg_.beta2) * g[k] * g[k];
            param(k) -= rate_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + cfg_.adam_eps);
        }
    }

    const VffAnsatz& a_;
    const Dataset* data_;
    TrainConfig cfg_;
    std::vector<double> theta_, gamma_;
    std::vector<double> m_, v_;
    double rate_;
    int adam_t_ = 0;
    int iter_ = 0;
    int since_improvement_ = 0;
    int restarts_ = 0;
    int window_iter_ = 0;
    double window_best_ = std::numeric_limits<double>::infinity();
    double best_cost_ = std::numeric_limits<double>::infinity();
    std::vector<double> best_theta_, best_gamma_;
    int best_iter_ = 0;
    bool converged_ = false;
    std::vector<TraceRecord> trace_;
    TraceRecord last_;
    std::chrono::steady_clock::time_point start_;
};

/// Trains until the cost reaches cfg.target_cost or cfg.max_iters steps were
/// taken. Starts from `init` when given, else from random_init(cfg.seed).
inline TrainResult reff_train(const VffAnsatz& a, const Dataset& data, const TrainConfig& cfg,
                              const TrainHooks& hooks = {},
                              std::optional<std::pair<std::vector<double>, std::vector<double>>> init = std::nullopt) {
    if (data.pairs.empty()) throw InvalidArgument("reff_train: empty dataset");
    auto [theta, gamma] = init ? *init : random_init(a, cfg.seed, cfg.init_range);
    Trainer trainer(a, data, cfg, std::move(theta), std::move(gamma));
    while (trainer.step(hooks)) {
    }
    return trainer.result();
}

/// Training-cost threshold from the algorithm's while-condition:
/// eps / (16 M0^2) - eps_trot^2 / (4 (2^n + 1)). Negative means no certificate.
inline ThresholdValue termination_threshold(double eps_target, double M0, double trotter_eps, int n) {
    detail::require(M0 >= 1, "termination_threshold: M0 must be >= 1");
    const double v = eps_target / (16 * M0 * M0) - trotter_eps * trotter_eps / (4 * (std::pow(2.0, n) + 1));
    return {v, v >= 0};
}

// ---------------------------------------------------------------------------
// Growing dataset

struct GrowthConfig {
    std::size_t initial_N = 1;
    std::size_t step = 1;
    std::size_t max_N = 10;
    std::size_t validation_N = 10;
    int plateau_window = 100;
    double validation_target = 1e-6;  // generalization reached when validation cost is at or below this

    void validate() const {
        if (initial_N < 1 || step < 1 || validation_N < 1 || plateau_window < 1 || max_N < initial_N)
            throw InvalidArgument("GrowthConfig: growth parameters must be positive and max_N >= initial_N");
    }
};

struct GrowthEvent {
    int iter = 0;
    std::size_t N = 0;  // dataset size after growing
    double train_cost = 0.0;
    double validation_cost = 0.0;
};

struct GrownResult {
    TrainResult train;
    std::vector<GrowthEvent> growth;
    std::size_t final_N = 0;
    std::optional<std::size_t> generalized_at;
    bool exhausted = false;  // max_N reached without generalizing
};

inline constexpr std::uint64_t kValidationStream = 0x76616c6964ULL;

/// Trains on pairs derive_seed(seed, 0..N-1) of `source`, adding `step` pairs
/// whenever, over plateau_window iterations, the training cost fell by at least
/// 1% while the held-out validation cost did not, or training converged
/// without generalizing.
inline GrownResult reff_train_grown(const VffAnsatz& a, const PauliSumHamiltonian& h, const TrotterConfig& trotter,
                                    DataSource source, RngSeed data_seed, const TrainConfig& cfg,
                                    const GrowthConfig& growth, const TrainHooks& extra = {}) {
    growth.validate();
    cfg.validate();
    const Dataset validation =
        generate_dataset(h, trotter, growth.validation_N, source, derive_seed(data_seed, kValidationStream));
    Dataset data = generate_dataset(h, trotter, growth.initial_N, source, data_seed);

    auto validation_cost = [&](std::span<const double> th, std::span<const double> ga) {
        return empirical_cost(a, th, ga, a.dt, validation, cfg.cost_kind).raw;
    };
    TrainHooks hooks = extra;
    hooks.validation = validation_cost;
    hooks.every = 1;

    auto [theta, gamma] = random_init(a, cfg.seed, cfg.init_range);
    Trainer trainer(a, data, cfg, std::move(theta), std::move(gamma));
    GrownResult out;
    double window_start_val = std::numeric_limits<double>::infinity();
    double window_start_cost = std::numeric_limits<double>::infinity();
    int window_start_iter = 0;

    auto grow = [&]() -> bool {
        if (data.size() >= growth.max_N) return false;
        const std::size_t target = std::min(growth.max_N, data.size() + growth.step);
        for (std::size_t j = data.size(); j < target; ++j)
            data.pairs.push_back(make_training_pair(h, trotter, source, derive_seed(data_seed, j)));
        trainer.set_dataset(data);
        trainer.reset_learning_rate();
        return true;
    };

    bool running = true;
    while (running) {
        running = trainer.step(hooks);
        const TraceRecord& rec = trainer.last();
        const double val = rec.validation_cost.value_or(1.0);
        if (val <= growth.validation_target && !out.generalized_at) out.generalized_at = data.size();
        // Growth stops for good once generalization was observed.
        const bool wants_data = !out.generalized_at;
        if (!running) {
            if (rec.cost <= cfg.target_cost && wants_data && grow()) {
                // Converged on the training set only: more data is needed.
                out.growth.push_back({rec.iter, data.size(), rec.cost, val});
                running = trainer.iteration() < cfg.max_iters;
                window_start_val = val;
                window_start_cost = rec.cost;
                window_start_iter = rec.iter;
            }
            continue;
        }
        if (rec.iter - window_start_iter >= growth.plateau_window) {
            auto gain = [](double from, double to) { return (from - to) / std::max(from, 1e-300); };
            const bool train_falls = gain(window_start_cost, rec.cost) >= 0.01;
            const bool val_flat = gain(window_start_val, val) < 0.01;
            if (wants_data && train_falls && val_flat && grow())
                out.growth.push_back({rec.iter, data.size(), rec.cost, val});
            window_start_val = val;
            window_start_cost = rec.cost;
            window_start_iter = rec.iter;
        }
    }
    out.exhausted = !out.generalized_at && data.size() >= growth.max_N;
    out.train = trainer.result();
    out.final_N = data.size();
    return out;
}

}  // namespace reff
