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
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtransfer/qsim.hpp"
#include "qtransfer/tsp.hpp"

namespace qtransfer::ansatz {

enum class AnsatzKind : std::uint8_t { EQC, EffSU2 };

inline std::string to_string(AnsatzKind k) { return k == AnsatzKind::EQC ? "eqc" : "effsu2"; }

inline AnsatzKind kind_from_string(const std::string& s) {
    if (s == "eqc") return AnsatzKind::EQC;
    if (s == "effsu2") return AnsatzKind::EffSU2;
    throw std::invalid_argument("unknown ansatz kind: " + s);
}

/// Number of trainable angles.
///   EQC:    2 per layer (gamma_l, beta_l), independent of the qubit count.
///   EffSU2: 2 per qubit per rotation block; a circuit with L entangling
///           layers has L+1 rotation blocks (rotation-entangle-...-rotation).
inline std::size_t param_count(AnsatzKind kind, int layers, int k) {
    if (layers < 1) throw std::invalid_argument("param_count: layers must be >= 1");
    if (kind == AnsatzKind::EQC) return 2 * static_cast<std::size_t>(layers);
    return 2 * static_cast<std::size_t>(layers + 1) * k;
}

/// Trainable angles plus the provenance needed to rebuild the circuit.
struct AnsatzParams {
    AnsatzKind kind = AnsatzKind::EQC;
    int layers = 1;
    std::vector<double> values;  // radians
    int trained_on = 0;          // city count the layout is currently sized for

    double gamma(int layer) const { return values[2 * static_cast<std::size_t>(layer)]; }
    double beta(int layer) const { return values[2 * static_cast<std::size_t>(layer) + 1]; }
};

inline void check_finite(const AnsatzParams& p) {
    for (double v : p.values)
        if (!std::isfinite(v)) throw std::invalid_argument("ansatz params must be finite");
}

/// Binary unvisited mask: s_i = 1 iff city i has not been visited yet.
struct EncodedState {
    std::vector<std::uint8_t> s;
};

inline EncodedState encode(const tsp::TourState& state, int k) {
    EncodedState e;
    e.s.resize(k);
    for (int i = 0; i < k; ++i) e.s[i] = state.is_visited(i) ? 0 : 1;
    return e;
}

/// Fig-1a circuit: H on every qubit, then per layer all-pairs ZZ entanglers
/// with edge-weighted angles (lexicographic (i,j) order) followed by the
/// state-masked X mixer (ascending qubits).
inline std::vector<qsim::GateOp> build_eqc(const tsp::TspInstance& inst,
                                           const EncodedState& enc,
                                           const AnsatzParams& params) {
    if (params.kind != AnsatzKind::EQC) throw std::invalid_argument("build_eqc: wrong kind");
    const int k = inst.k;
    if (static_cast<int>(enc.s.size()) != k)
        throw std::invalid_argument("build_eqc: encoded state size mismatch");
    if (params.values.size() != param_count(AnsatzKind::EQC, params.layers, k))
        throw std::invalid_argument("build_eqc: parameter count mismatch");
    std::vector<qsim::GateOp> circuit;
    circuit.reserve(k + params.layers * (k * (k - 1) / 2 + k));
    for (int q = 0; q < k; ++q) circuit.push_back(qsim::gate::h(q));
    for (int l = 0; l < params.layers; ++l) {
        const double gamma = params.gamma(l);
        const double beta = params.beta(l);
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j)
                circuit.push_back(qsim::gate::rzz(i, j, gamma * inst.w(i, j)));
        for (int q = 0; q < k; ++q)
            circuit.push_back(qsim::gate::rx(q, enc.s[q] ? beta : 0.0));
    }
    return circuit;
}

/// Fig-1b circuit: per entangling layer an RY+RZ rotation block followed by
/// the linear CNOT chain, closed by a final rotation block.
inline std::vector<qsim::GateOp> build_effsu2(int k, const AnsatzParams& params) {
    if (params.kind != AnsatzKind::EffSU2) throw std::invalid_argument("build_effsu2: wrong kind");
    if (params.values.size() != param_count(AnsatzKind::EffSU2, params.layers, k))
        throw std::invalid_argument("build_effsu2: parameter count mismatch");
    std::vector<qsim::GateOp> circuit;
    const int blocks = params.layers + 1;
    circuit.reserve(static_cast<std::size_t>(blocks) * 2 * k +
                    static_cast<std::size_t>(params.layers) * (k - 1));
    for (int b = 0; b < blocks; ++b) {
        const std::size_t base = 2 * static_cast<std::size_t>(b) * k;
        for (int q = 0; q < k; ++q)
            circuit.push_back(qsim::gate::ry(q, params.values[base + 2 * q]));
        for (int q = 0; q < k; ++q)
            circuit.push_back(qsim::gate::rz(q, params.values[base + 2 * q + 1]));
        if (b < params.layers)
            for (int q = 0; q + 1 < k; ++q) circuit.push_back(qsim::gate::cnot(q, q + 1));
    }
    return circuit;
}

/// Gate index in build_effsu2's output that carries parameter `p`.
/// Used by the finite-difference fast path; the parameter order inside a
/// rotation block is (theta_q0, phi_q0, theta_q1, phi_q1, ...) while gates are
/// emitted as all RY then all RZ.
inline std::size_t effsu2_gate_index(int k, std::size_t p) {
    const std::size_t block = p / (2 * static_cast<std::size_t>(k));
    const std::size_t in_block = p % (2 * static_cast<std::size_t>(k));
    const std::size_t q = in_block / 2;
    const bool is_phi = (in_block % 2) != 0;
    const std::size_t block_start = block * (2 * static_cast<std::size_t>(k) + (k - 1));
    return block_start + (is_phi ? static_cast<std::size_t>(k) + q : q);
}

/// Size adaptation (zero-shot transfer): the EQC layout is size independent;
/// EffSU2 keeps the trained angles and gives each new qubit identity
/// rotations (zeros) in every rotation block.
inline AnsatzParams adapt_params(const AnsatzParams& params, int m) {
    if (m < params.trained_on)
        throw std::invalid_argument("adapt_params: target smaller than trained size");
    AnsatzParams out = params;
    out.trained_on = m;
    if (params.kind == AnsatzKind::EQC || m == params.trained_on) return out;
    const int n = params.trained_on;
    const int blocks = params.layers + 1;
    out.values.clear();
    out.values.reserve(param_count(AnsatzKind::EffSU2, params.layers, m));
    for (int b = 0; b < blocks; ++b) {
        const std::size_t base = 2 * static_cast<std::size_t>(b) * n;
        for (int q = 0; q < n; ++q) {
            out.values.push_back(params.values[base + 2 * q]);
            out.values.push_back(params.values[base + 2 * q + 1]);
        }
        for (int q = n; q < m; ++q) {
            out.values.push_back(0.0);
            out.values.push_back(0.0);
        }
    }
    return out;
}

/// Single-qubit Z readout observables, one per city.
inline std::vector<qsim::Observable> q_observables(int k) {
    if (k < 2) throw std::invalid_argument("q_observables: k must be >= 2");
    std::vector<qsim::Observable> obs;
    obs.reserve(k);
    for (int q = 0; q < k; ++q) obs.push_back(qsim::Observable::z(q));
    return obs;
}

// ---------------------------------------------------------------------------
// Checkpoint serialization
// ---------------------------------------------------------------------------

struct Checkpoint {
    AnsatzParams params;
    nlohmann::json hyperparams;
    std::uint64_t seed = 0;
    std::string created_at;
};

inline nlohmann::json checkpoint_to_json(const Checkpoint& c) {
    return nlohmann::json{{"kind", to_string(c.params.kind)},
                          {"layers", c.params.layers},
                          {"trained_on", c.params.trained_on},
                          {"values", c.params.values},
                          {"hyperparams", c.hyperparams},
                          {"seed", c.seed},
                          {"created_at", c.created_at}};
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    Checkpoint c;
    c.params.kind = kind_from_string(j.at("kind").get<std::string>());
    c.params.layers = j.at("layers").get<int>();
    c.params.trained_on = j.at("trained_on").get<int>();
    c.params.values = j.at("values").get<std::vector<double>>();
    c.hyperparams = j.value("hyperparams", nlohmann::json::object());
    c.seed = j.value("seed", std::uint64_t{0});
    c.created_at = j.value("created_at", std::string{});
    check_finite(c.params);
    return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << checkpoint_to_json(c).dump(2) << "\n";
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
    nlohmann::json j;
    in >> j;
    return checkpoint_from_json(j);
}

}  // namespace qtransfer::ansatz
