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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtransfer/common.hpp"

namespace qtransfer::tsp {

inline constexpr int kMinCities = 3;
inline constexpr int kMaxCities = 20;
inline constexpr int kMaxHeldKarp = 18;
inline constexpr int kMaxBruteForce = 9;

enum class Generator : std::uint8_t { RandomUniform, EuclideanUnitSquare };

inline std::string to_string(Generator g) {
    return g == Generator::RandomUniform ? "random_uniform" : "euclidean_unit_square";
}

inline Generator generator_from_string(const std::string& s) {
    if (s == "random_uniform") return Generator::RandomUniform;
    if (s == "euclidean_unit_square") return Generator::EuclideanUnitSquare;
    throw std::invalid_argument("unknown generator: " + s);
}

/// Complete weighted graph with symmetric positive weights and provenance.
struct TspInstance {
    int k = 0;
    std::vector<double> weights;  // k*k, row-major, zero diagonal
    Generator generator = Generator::RandomUniform;
    std::uint64_t seed = 0;
    std::vector<double> coords;  // 2k (x,y) pairs, Euclidean only

    double w(int i, int j) const { return weights[static_cast<std::size_t>(i) * k + j]; }
    double& w(int i, int j) { return weights[static_cast<std::size_t>(i) * k + j]; }
};

inline TspInstance gen_instance(int k, Generator gen, std::uint64_t seed) {
    if (k < kMinCities || k > kMaxCities)
        throw std::out_of_range("gen_instance: city count must be in 3..20");
    TspInstance inst;
    inst.k = k;
    inst.generator = gen;
    inst.seed = seed;
    inst.weights.assign(static_cast<std::size_t>(k) * k, 0.0);
    Rng rng(seed);
    if (gen == Generator::RandomUniform) {
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j) {
                const double v = rng.uniform(0.1, 2.0);
                inst.w(i, j) = v;
                inst.w(j, i) = v;
            }
    } else {
        inst.coords.resize(2 * static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            inst.coords[2 * i] = rng.uniform();
            inst.coords[2 * i + 1] = rng.uniform();
        }
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j) {
                const double dx = inst.coords[2 * i] - inst.coords[2 * j];
                const double dy = inst.coords[2 * i + 1] - inst.coords[2 * j + 1];
                const double v = std::sqrt(dx * dx + dy * dy);
                inst.w(i, j) = v;
                inst.w(j, i) = v;
            }
    }
    return inst;
}

inline void to_json(nlohmann::json& j, const TspInstance& inst) {
    nlohmann::json w = nlohmann::json::array();
    for (int i = 0; i < inst.k; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < inst.k; ++c) row.push_back(inst.w(i, c));
        w.push_back(std::move(row));
    }
    j = nlohmann::json{{"k", inst.k},
                       {"generator", to_string(inst.generator)},
                       {"seed", inst.seed},
                       {"weights", std::move(w)}};
    if (!inst.coords.empty()) {
        nlohmann::json coords = nlohmann::json::array();
        for (int i = 0; i < inst.k; ++i)
            coords.push_back({inst.coords[2 * i], inst.coords[2 * i + 1]});
        j["coords"] = std::move(coords);
    }
}

inline void from_json(const nlohmann::json& j, TspInstance& inst) {
    inst.k = j.at("k").get<int>();
    inst.generator = generator_from_string(j.at("generator").get<std::string>());
    inst.seed = j.at("seed").get<std::uint64_t>();
    inst.weights.assign(static_cast<std::size_t>(inst.k) * inst.k, 0.0);
    const auto& w = j.at("weights");
    for (int i = 0; i < inst.k; ++i)
        for (int c = 0; c < inst.k; ++c) inst.w(i, c) = w.at(i).at(c).get<double>();
    inst.coords.clear();
    if (j.contains("coords")) {
        for (int i = 0; i < inst.k; ++i) {
            inst.coords.push_back(j["coords"].at(i).at(0).get<double>());
            inst.coords.push_back(j["coords"].at(i).at(1).get<double>());
        }
    }
}

/// MDP state: where the tour currently stands.
struct TourState {
    int start = 0;
    int current = 0;
    std::uint32_t visited = 0;
    double partial_cost = 0.0;

    int visited_count() const { return __builtin_popcount(visited); }
    bool is_visited(int city) const { return (visited >> city) & 1u; }
};

inline TourState env_reset(const TspInstance& inst, int start) {
    if (start < 0 || start >= inst.k) throw std::out_of_range("env_reset: start out of range");
    TourState s;
    s.start = start;
    s.current = start;
    s.visited = std::uint32_t{1} << start;
    s.partial_cost = 0.0;
    return s;
}

struct StepResult {
    TourState next;
    double reward = 0.0;
    bool done = false;
};

inline StepResult env_step(const TspInstance& inst, const TourState& state, int action) {
    if (action < 0 || action >= inst.k) throw std::out_of_range("env_step: action out of range");
    if (state.is_visited(action)) throw std::invalid_argument("env_step: action already visited");
    StepResult r;
    r.next = state;
    r.next.visited |= std::uint32_t{1} << action;
    r.next.current = action;
    const double edge = inst.w(state.current, action);
    r.next.partial_cost = state.partial_cost + edge;
    if (r.next.visited_count() == inst.k) {
        r.next.partial_cost += inst.w(action, state.start);
        r.done = true;
    }
    // Difference of consecutive partial costs: episode rewards telescope to
    // exactly -(final tour length).
    r.reward = state.partial_cost - r.next.partial_cost;
    return r;
}

struct Tour {
    std::vector<int> order;
    double length = 0.0;
};

/// Canonical tour length: consecutive edges in order, then the closing edge.
/// All solvers report lengths through this function so equal tours compare
/// bit-identically.
inline double tour_length(const TspInstance& inst, const std::vector<int>& order) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) acc += inst.w(order[i], order[i + 1]);
    acc += inst.w(order.back(), order.front());
    return acc;
}

/// Exact solver: dynamic programming over (visited set, endpoint). The DP
/// accumulates path costs front-to-back in exactly the association order of
/// tour_length, so the reported minimum is bit-identical to exhaustive
/// enumeration. Direction ties resolve toward the lexicographically smaller
/// order.
inline Tour held_karp(const TspInstance& inst) {
    const int k = inst.k;
    if (k > kMaxHeldKarp) throw std::out_of_range("held_karp: k > 18");
    const std::uint32_t full = (std::uint32_t{1} << k) - 1;
    const double inf = std::numeric_limits<double>::infinity();
    // dp[mask][j]: cheapest path 0 -> ... -> j visiting exactly `mask`.
    std::vector<double> dp(static_cast<std::size_t>(full + 1) * k, inf);
    std::vector<std::int8_t> parent(static_cast<std::size_t>(full + 1) * k, -1);
    auto DP = [&](std::uint32_t mask, int j) -> double& {
        return dp[static_cast<std::size_t>(mask) * k + j];
    };
    auto PAR = [&](std::uint32_t mask, int j) -> std::int8_t& {
        return parent[static_cast<std::size_t>(mask) * k + j];
    };
    DP(1, 0) = 0.0;
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        if (!(mask & 1u)) continue;
        for (int j = 0; j < k; ++j) {
            if (!((mask >> j) & 1u)) continue;
            const double base = DP(mask, j);
            if (base == inf) continue;
            for (int u = 0; u < k; ++u) {
                if ((mask >> u) & 1u) continue;
                const std::uint32_t next = mask | (std::uint32_t{1} << u);
                const double cand = base + inst.w(j, u);
                if (cand < DP(next, u)) {
                    DP(next, u) = cand;
                    PAR(next, u) = static_cast<std::int8_t>(j);
                }
            }
        }
    }
    double best = inf;
    int end = 1;
    for (int j = 1; j < k; ++j) {
        const double cand = DP(full, j) + inst.w(j, 0);
        if (cand < best) {
            best = cand;
            end = j;
        }
    }
    Tour t;
    t.order.resize(k);
    std::uint32_t mask = full;
    int at = end;
    for (int pos = k - 1; pos >= 1; --pos) {
        t.order[pos] = at;
        const int pj = PAR(mask, at);
        mask ^= std::uint32_t{1} << at;
        at = pj;
    }
    t.order[0] = 0;
    t.length = tour_length(inst, t.order);
    // A symmetric tour has two directed representations; prefer the
    // lexicographically smaller one when their costs agree exactly.
    std::vector<int> reversed(k);
    reversed[0] = 0;
    for (int i = 1; i < k; ++i) reversed[i] = t.order[k - i];
    if (tour_length(inst, reversed) == t.length && reversed < t.order) t.order = reversed;
    return t;
}

/// Exhaustive oracle over all (k-1)! orders anchored at city 0. Keeps the
/// first minimum, which is the lexicographically smallest optimal order.
inline Tour brute_force(const TspInstance& inst) {
    const int k = inst.k;
    if (k > kMaxBruteForce) throw std::out_of_range("brute_force: k > 9");
    std::vector<int> perm(k - 1);
    std::iota(perm.begin(), perm.end(), 1);
    std::vector<int> order(k);
    order[0] = 0;
    Tour best;
    best.length = std::numeric_limits<double>::infinity();
    do {
        std::copy(perm.begin(), perm.end(), order.begin() + 1);
        const double len = tour_length(inst, order);
        if (len < best.length) {
            best.length = len;
            best.order = order;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

inline Tour nearest_neighbor(const TspInstance& inst, int start) {
    if (start < 0 || start >= inst.k) throw std::out_of_range("nearest_neighbor: start");
    Tour t;
    t.order.push_back(start);
    std::uint32_t visited = std::uint32_t{1} << start;
    int at = start;
    for (int step = 1; step < inst.k; ++step) {
        int pick = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int u = 0; u < inst.k; ++u) {
            if ((visited >> u) & 1u) continue;
            if (inst.w(at, u) < best) {
                best = inst.w(at, u);
                pick = u;
            }
        }
        t.order.push_back(pick);
        visited |= std::uint32_t{1} << pick;
        at = pick;
    }
    t.length = tour_length(inst, t.order);
    return t;
}

namespace detail {

/// Exact minimum-weight perfect matching by pairing enumeration; |odd| <= 10
/// means at most 9!! = 945 pairings.
inline void match_exact(const TspInstance& inst, std::vector<int>& odd,
                        std::vector<char>& used, double acc, double& best,
                        std::vector<std::pair<int, int>>& cur,
                        std::vector<std::pair<int, int>>& bestpairs) {
    std::size_t first = 0;
    while (first < odd.size() && used[first]) ++first;
    if (first == odd.size()) {
        if (acc < best) {
            best = acc;
            bestpairs = cur;
        }
        return;
    }
    used[first] = 1;
    for (std::size_t j = first + 1; j < odd.size(); ++j) {
        if (used[j]) continue;
        used[j] = 1;
        cur.emplace_back(odd[first], odd[j]);
        const double w = inst.w(odd[first], odd[j]);
        if (acc + w < best)
            match_exact(inst, odd, used, acc + w, best, cur, bestpairs);
        cur.pop_back();
        used[j] = 0;
    }
    used[first] = 0;
}

}  // namespace detail

/// MST + perfect matching on odd-degree vertices + Euler circuit + shortcut.
/// Matching is exact (brute force) when the odd set has at most 10 vertices,
/// greedy otherwise. Returns whether the exact branch ran alongside the tour.
struct ChristofidesResult {
    Tour tour;
    bool exact_matching = false;
};

inline ChristofidesResult christofides_like(const TspInstance& inst) {
    const int k = inst.k;
    if (k < kMinCities) throw std::out_of_range("christofides_like: k < 3");

    // Prim MST from vertex 0, ties to lowest index.
    std::vector<int> parent(k, -1);
    std::vector<double> key(k, std::numeric_limits<double>::infinity());
    std::vector<char> in_tree(k, 0);
    key[0] = 0.0;
    for (int it = 0; it < k; ++it) {
        int v = -1;
        for (int u = 0; u < k; ++u)
            if (!in_tree[u] && (v == -1 || key[u] < key[v])) v = u;
        in_tree[v] = 1;
        for (int u = 0; u < k; ++u)
            if (!in_tree[u] && inst.w(v, u) < key[u]) {
                key[u] = inst.w(v, u);
                parent[u] = v;
            }
    }

    std::vector<std::vector<int>> adj(k);
    std::vector<int> degree(k, 0);
    for (int v = 1; v < k; ++v) {
        adj[v].push_back(parent[v]);
        adj[parent[v]].push_back(v);
        ++degree[v];
        ++degree[parent[v]];
    }

    std::vector<int> odd;
    for (int v = 0; v < k; ++v)
        if (degree[v] % 2) odd.push_back(v);

    ChristofidesResult result;
    std::vector<std::pair<int, int>> pairs;
    if (odd.size() <= 10) {
        result.exact_matching = true;
        double best = std::numeric_limits<double>::infinity();
        std::vector<char> used(odd.size(), 0);
        std::vector<std::pair<int, int>> cur;
        detail::match_exact(inst, odd, used, 0.0, best, cur, pairs);
    } else {
        std::vector<char> used(odd.size(), 0);
        for (std::size_t matched = 0; matched < odd.size(); matched += 2) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t bi = 0, bj = 0;
            for (std::size_t i = 0; i < odd.size(); ++i) {
                if (used[i]) continue;
                for (std::size_t j = i + 1; j < odd.size(); ++j) {
                    if (used[j]) continue;
                    if (inst.w(odd[i], odd[j]) < best) {
                        best = inst.w(odd[i], odd[j]);
                        bi = i;
                        bj = j;
                    }
                }
            }
            used[bi] = used[bj] = 1;
            pairs.emplace_back(odd[bi], odd[bj]);
        }
    }
    for (const auto& [u, v] : pairs) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());

    // Hierholzer Euler circuit on the MST+matching multigraph.
    std::vector<std::vector<std::pair<int, char>>> multi(k);  // (neighbor, consumed)
    std::vector<std::size_t> cursor(k, 0);
    for (int v = 0; v < k; ++v)
        for (int u : adj[v]) multi[v].push_back({u, 0});
    std::vector<int> stack = {0};
    std::vector<int> circuit;
    while (!stack.empty()) {
        const int v = stack.back();
        bool advanced = false;
        for (std::size_t& c = cursor[v]; c < multi[v].size(); ++c) {
            auto& [u, consumed] = multi[v][c];
            if (consumed) continue;
            consumed = 1;
            for (auto& [w_, back_consumed] : multi[u]) {
                if (w_ == v && !back_consumed) {
                    back_consumed = 1;
                    break;
                }
            }
            stack.push_back(u);
            advanced = true;
            break;
        }
        if (!advanced) {
            circuit.push_back(v);
            stack.pop_back();
        }
    }

    // Shortcut repeated cities.
    std::vector<char> seen(k, 0);
    for (int v : circuit) {
        if (!seen[v]) {
            seen[v] = 1;
            result.tour.order.push_back(v);
        }
    }
    result.tour.length = tour_length(inst, result.tour.order);
    return result;
}

inline constexpr const char* kToursHeader = "run_id,k,solver,length,normalized";

/// Serialized solver-tour row (see kToursHeader).
inline std::string tour_csv_row(const std::string& run_id, int k, const std::string& solver,
                                double length, double normalized) {
    return run_id + "," + std::to_string(k) + "," + solver + "," + fmt_g6(length) + "," +
           fmt_g6(normalized);
}

/// Affine normalization anchors: exact optimum and the nearest-neighbor tour
/// from city 0.
struct PerfNormalizer {
    double l_opt = 0.0;
    double l_max = 0.0;
    bool degenerate = false;
};

inline PerfNormalizer make_normalizer(const TspInstance& inst) {
    PerfNormalizer n;
    n.l_opt = held_karp(inst).length;
    n.l_max = nearest_neighbor(inst, 0).length;
    n.degenerate = !(n.l_max - n.l_opt > 1e-12 * std::max(1.0, n.l_opt));
    return n;
}

/// P = 1 - (L - L_opt)/(L_max - L_opt), clamped to [0, 1]. Degenerate
/// normalizers (nearest-neighbor already optimal) score 1.
inline double normalize_performance(double length, const PerfNormalizer& norm) {
    if (norm.degenerate) return 1.0;
    const double p = 1.0 - (length - norm.l_opt) / (norm.l_max - norm.l_opt);
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace qtransfer::tsp
