// Copyright 2026 The qtransfer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtransfer/ansatz.hpp"
#include "qtransfer/common.hpp"
#include "qtransfer/qsim.hpp"
#include "qtransfer/tsp.hpp"

namespace qtransfer::agent {

inline constexpr double kMasked = -std::numeric_limits<double>::infinity();

struct Hyperparams {
    double learning_rate = 0.01;
    double eps_start = 1.0;
    double eps_end = 0.01;
    double eps_decay = 1000.0;
    double discount = 0.9;
    double fd_step = 0.01;  // radians
    int episodes = 1000;

    void validate() const {
        if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be > 0");
        if (!(0 <= eps_end && eps_end <= eps_start && eps_start <= 1))
            throw std::invalid_argument("need 0 <= eps_end <= eps_start <= 1");
        if (!(eps_decay > 0)) throw std::invalid_argument("eps_decay must be > 0");
        if (!(discount > 0 && discount <= 1)) throw std::invalid_argument("discount in (0,1]");
        if (!(fd_step > 0)) throw std::invalid_argument("fd_step must be > 0");
        if (episodes < 0) throw std::invalid_argument("episodes must be >= 0");
    }
};

inline void to_json(nlohmann::json& j, const Hyperparams& h) {
    j = nlohmann::json{{"learning_rate", h.learning_rate}, {"eps_start", h.eps_start},
                       {"eps_end", h.eps_end},             {"eps_decay", h.eps_decay},
                       {"discount", h.discount},           {"fd_step", h.fd_step},
                       {"episodes", h.episodes}};
}

inline void from_json(const nlohmann::json& j, Hyperparams& h) {
    h.learning_rate = j.value("learning_rate", 0.01);
    h.eps_start = j.value("eps_start", 1.0);
    h.eps_end = j.value("eps_end", 0.01);
    h.eps_decay = j.value("eps_decay", 1000.0);
    h.discount = j.value("discount", 0.9);
    h.fd_step = j.value("fd_step", 0.01);
    h.episodes = j.value("episodes", 1000);
}

struct EpisodeRecord {
    int episode = 0;
    double tour_length = 0.0;
    double normalized_perf = 0.0;
    double epsilon = 0.0;
    double td_loss_sum = 0.0;
};

struct Transition {
    tsp::TourState state;
    int action = 0;
    double reward = 0.0;
    tsp::TourState next_state;
    bool done = false;
};

inline double epsilon_at(int episode, const Hyperparams& hp) {
    if (episode < 0) throw std::invalid_argument("epsilon_at: episode must be >= 0");
    return hp.eps_end + (hp.eps_start - hp.eps_end) * std::exp(-episode / hp.eps_decay);
}

namespace detail {

/// <Z_current Z_a> for every city a in one amplitude pass.
inline std::vector<double> pair_z_expectations(const qsim::StateVector& psi, int current) {
    const int k = psi.num_qubits;
    std::vector<double> e(k, 0.0);
    const std::size_t cbit = std::size_t{1} << current;
    const std::size_t dim = psi.dim();
    for (std::size_t b = 0; b < dim; ++b) {
        const double p = std::norm(psi.amplitudes[b]);
        if (p == 0.0) continue;
        const double pc = (b & cbit) ? -p : p;
        for (int a = 0; a < k; ++a) e[a] += (b & (std::size_t{1} << a)) ? -pc : pc;
    }
    return e;
}

inline double pair_z_expectation(const qsim::StateVector& psi, int qa, int qb) {
    const std::size_t mask = (std::size_t{1} << qa) | (std::size_t{1} << qb);
    double acc = 0.0;
    const std::size_t dim = psi.dim();
    for (std::size_t b = 0; b < dim; ++b) {
        const double p = std::norm(psi.amplitudes[b]);
        acc += (__builtin_popcountll(b & mask) & 1) ? -p : p;
    }
    return acc;
}

inline std::vector<qsim::GateOp> build_circuit(const tsp::TspInstance& inst,
                                               const tsp::TourState& state,
                                               const ansatz::AnsatzParams& params) {
    if (params.trained_on != inst.k)
        throw std::invalid_argument("params not adapted to instance size");
    if (params.kind == ansatz::AnsatzKind::EQC)
        return ansatz::build_eqc(inst, ansatz::encode(state, inst.k), params);
    return ansatz::build_effsu2(inst.k, params);
}

}  // namespace detail

/// Q(s, a) = <Z_current Z_a> of the ansatz state, one entry per city;
/// visited cities carry the -inf mask sentinel.
inline std::vector<double> q_values(const tsp::TspInstance& inst, const tsp::TourState& state,
                                    const ansatz::AnsatzParams& params) {
    const auto circuit = detail::build_circuit(inst, state, params);
    const qsim::StateVector psi = qsim::run_circuit(circuit, inst.k);
    std::vector<double> q = detail::pair_z_expectations(psi, state.current);
    for (int a = 0; a < inst.k; ++a)
        if (state.is_visited(a)) q[a] = kMasked;
    return q;
}

/// epsilon-greedy: uniform over unmasked cities with probability eps,
/// otherwise argmax with ties to the lowest index.
inline int select_action(const std::vector<double>& qvals, double eps, Rng& rng) {
    std::vector<int> open;
    for (std::size_t i = 0; i < qvals.size(); ++i)
        if (qvals[i] != kMasked) open.push_back(static_cast<int>(i));
    if (open.empty()) throw std::invalid_argument("select_action: all actions masked");
    if (rng.uniform() < eps) return open[rng.uniform_int(open.size())];
    int best = open[0];
    for (int a : open)
        if (qvals[a] > qvals[best]) best = a;
    return best;
}

namespace detail {

inline double q_value_of(const tsp::TspInstance& inst, const tsp::TourState& state, int action,
                         const ansatz::AnsatzParams& params) {
    const auto circuit = build_circuit(inst, state, params);
    const qsim::StateVector psi = qsim::run_circuit(circuit, inst.k);
    return pair_z_expectation(psi, state.current, action);
}

/// Central finite differences; EffSU2 uses cached prefix states since each
/// parameter owns exactly one gate and same-axis rotations compose.
inline std::vector<double> grad_q(const tsp::TspInstance& inst, const tsp::TourState& state,
                                  int action, const ansatz::AnsatzParams& params, double h) {
    const std::size_t np = params.values.size();
    std::vector<double> grad(np, 0.0);
    if (params.kind == ansatz::AnsatzKind::EQC) {
        ansatz::AnsatzParams shifted = params;
        for (std::size_t p = 0; p < np; ++p) {
            shifted.values[p] = params.values[p] + h;
            const double plus = q_value_of(inst, state, action, shifted);
            shifted.values[p] = params.values[p] - h;
            const double minus = q_value_of(inst, state, action, shifted);
            shifted.values[p] = params.values[p];
            grad[p] = (plus - minus) / (2.0 * h);
        }
        return grad;
    }
    const int k = inst.k;
    const auto circuit = build_circuit(inst, state, params);
    std::vector<qsim::StateVector> prefix;
    prefix.reserve(circuit.size() + 1);
    prefix.push_back(qsim::zero_state(k));
    for (const auto& g : circuit) prefix.push_back(qsim::apply_gate(prefix.back(), g));
    for (std::size_t p = 0; p < np; ++p) {
        const std::size_t gi = ansatz::effsu2_gate_index(k, p);
        const qsim::GateOp& g = circuit[gi];
        double val[2];
        for (int side = 0; side < 2; ++side) {
            qsim::StateVector psi = prefix[gi + 1];
            qsim::GateOp bump = g;
            bump.angle = side == 0 ? h : -h;
            qsim::apply_in_place(psi, bump);
            for (std::size_t rest = gi + 1; rest < circuit.size(); ++rest)
                qsim::apply_in_place(psi, circuit[rest]);
            val[side] = pair_z_expectation(psi, state.current, action);
        }
        grad[p] = (val[0] - val[1]) / (2.0 * h);
    }
    return grad;
}

}  // namespace detail

struct TdResult {
    double td_error = 0.0;  // Q(s,a) - y, computed with pre-update params
    double loss = 0.0;      // squared TD error
};

/// One gradient step on (Q(s,a) - y)^2 with a frozen target.
inline TdResult td_update(ansatz::AnsatzParams& params, const Transition& t,
                          const tsp::TspInstance& inst, const Hyperparams& hp) {
    const double q_sa = detail::q_value_of(inst, t.state, t.action, params);
    double y = t.reward;
    if (!t.done) {
        const std::vector<double> qn = q_values(inst, t.next_state, params);
        double best = kMasked;
        for (double v : qn)
            if (v != kMasked && v > best) best = v;
        y += hp.discount * best;
    }
    TdResult r;
    r.td_error = q_sa - y;
    r.loss = r.td_error * r.td_error;
    if (hp.learning_rate == 0.0 || r.td_error == 0.0) return r;
    const std::vector<double> grad = detail::grad_q(inst, t.state, t.action, params, hp.fd_step);
    const double scale = hp.learning_rate * 2.0 * r.td_error;
    for (std::size_t p = 0; p < params.values.size(); ++p)
        params.values[p] -= scale * grad[p];
    return r;
}

/// Greedy/exploratory rollout from a given start city. Pass eps = 0 and any
/// rng for deterministic greedy evaluation.
inline tsp::Tour rollout(const tsp::TspInstance& inst, const ansatz::AnsatzParams& params,
                         int start, double eps, Rng& rng) {
    tsp::TourState s = tsp::env_reset(inst, start);
    tsp::Tour tour;
    tour.order.push_back(start);
    while (s.visited_count() < inst.k) {
        const std::vector<double> qv = q_values(inst, s, params);
        const int a = select_action(qv, eps, rng);
        s = tsp::env_step(inst, s, a).next;
        tour.order.push_back(a);
    }
    tour.length = s.partial_cost;
    return tour;
}

enum class InstanceMode : std::uint8_t { Fresh, Fixed };

inline std::string to_string(InstanceMode m) {
    return m == InstanceMode::Fresh ? "fresh" : "fixed";
}

inline InstanceMode instance_mode_from_string(const std::string& s) {
    if (s == "fresh") return InstanceMode::Fresh;
    if (s == "fixed") return InstanceMode::Fixed;
    throw std::invalid_argument("unknown instance_mode: " + s);
}

struct TrainConfig {
    int k = 4;
    ansatz::AnsatzKind kind = ansatz::AnsatzKind::EQC;
    int layers = 1;
    tsp::Generator generator = tsp::Generator::RandomUniform;
    Hyperparams hp;
    std::uint64_t seed = 0;
    InstanceMode instance_mode = InstanceMode::Fresh;
    // Optional warm start (fine-tuning): when set, training continues from
    // these values instead of a fresh initialization.
    const ansatz::AnsatzParams* initial = nullptr;
};

struct TrainOutput {
    ansatz::AnsatzParams params;
    std::vector<EpisodeRecord> telemetry;
};

inline ansatz::AnsatzParams init_params(ansatz::AnsatzKind kind, int layers, int k,
                                        std::uint64_t seed) {
    ansatz::AnsatzParams p;
    p.kind = kind;
    p.layers = layers;
    p.trained_on = k;
    p.values.resize(ansatz::param_count(kind, layers, k));
    Rng rng(derive_seed(seed, "init"));
    for (double& v : p.values) v = rng.uniform(-0.1, 0.1);
    return p;
}

/// Episodic Q-learning: each episode draws an instance (fresh or fixed mode),
/// starts at a seeded-random city, rolls out epsilon-greedily and applies a
/// per-step TD update.
inline TrainOutput train(const TrainConfig& cfg) {
    cfg.hp.validate();
    TrainOutput out;
    out.params = cfg.initial ? *cfg.initial
                             : init_params(cfg.kind, cfg.layers, cfg.k, cfg.seed);
    if (out.params.trained_on != cfg.k)
        throw std::invalid_argument("train: initial params not sized for k (adapt first)");
    Rng explore(derive_seed(cfg.seed, "explore"));
    const tsp::TspInstance fixed =
        cfg.instance_mode == InstanceMode::Fixed
            ? tsp::gen_instance(cfg.k, cfg.generator, derive_seed(cfg.seed, "fixed-instance"))
            : tsp::TspInstance{};
    out.telemetry.reserve(cfg.hp.episodes);
    for (int e = 0; e < cfg.hp.episodes; ++e) {
        const tsp::TspInstance inst =
            cfg.instance_mode == InstanceMode::Fixed
                ? fixed
                : tsp::gen_instance(cfg.k, cfg.generator,
                                    derive_seed(cfg.seed, "episode-instance", e));
        const double eps = epsilon_at(e, cfg.hp);
        const int start = static_cast<int>(explore.uniform_int(cfg.k));
        tsp::TourState s = tsp::env_reset(inst, start);
        double loss_sum = 0.0;
        while (s.visited_count() < cfg.k) {
            const std::vector<double> qv = q_values(inst, s, out.params);
            const int a = select_action(qv, eps, explore);
            const tsp::StepResult step = tsp::env_step(inst, s, a);
            Transition t{s, a, step.reward, step.next, step.done};
            loss_sum += td_update(out.params, t, inst, cfg.hp).loss;
            s = step.next;
        }
        const tsp::PerfNormalizer norm = tsp::make_normalizer(inst);
        out.telemetry.push_back({e, s.partial_cost,
                                 tsp::normalize_performance(s.partial_cost, norm), eps,
                                 loss_sum});
    }
    return out;
}

struct EvalRow {
    double tour_length = 0.0;
    double normalized_perf = 0.0;
};

/// One evaluation case: the instance and the start city. Derived only from
/// (k, generator, seed, index) so every policy compared under the same
/// arguments sees byte-identical cases.
struct EvalCase {
    tsp::TspInstance instance;
    int start = 0;
};

inline EvalCase eval_case(int k, tsp::Generator generator, std::uint64_t seed, int index) {
    EvalCase c;
    c.instance = tsp::gen_instance(k, generator, derive_seed(seed, "eval-instance", index));
    Rng rng(derive_seed(seed, "eval-rng", index));
    c.start = static_cast<int>(rng.uniform_int(k));
    return c;
}

/// Frozen-parameter greedy evaluation on fresh instances.
inline std::vector<EvalRow> evaluate(const ansatz::AnsatzParams& params, int k, int num_instances,
                                     std::uint64_t seed, tsp::Generator generator,
                                     bool greedy = true) {
    if (params.trained_on != k)
        throw std::invalid_argument("evaluate: params not adapted to k");
    std::vector<EvalRow> rows;
    rows.reserve(num_instances);
    for (int i = 0; i < num_instances; ++i) {
        const EvalCase c = eval_case(k, generator, seed, i);
        Rng rng(derive_seed(seed, "eval-policy-rng", i));
        const tsp::Tour tour = rollout(c.instance, params, c.start, greedy ? 0.0 : 1.0, rng);
        const tsp::PerfNormalizer norm = tsp::make_normalizer(c.instance);
        rows.push_back({tour.length, tsp::normalize_performance(tour.length, norm)});
    }
    return rows;
}

}  // namespace qtransfer::agent
