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
#include <vector>

#include "qtransfer/common.hpp"
#include "qtransfer/qsim.hpp"
#include "qtransfer/tsp.hpp"

namespace qtest {

using qtransfer::Rng;
namespace qsim = qtransfer::qsim;
namespace tsp = qtransfer::tsp;

inline std::vector<qsim::GateOp> random_circuit(int k, int depth, Rng& rng) {
    std::vector<qsim::GateOp> ops;
    ops.reserve(depth);
    for (int d = 0; d < depth; ++d) {
        const double th = rng.uniform(-M_PI, M_PI);
        const int q = static_cast<int>(rng.uniform_int(k));
        switch (rng.uniform_int(k >= 2 ? 6 : 4)) {
            case 0: ops.push_back(qsim::gate::h(q)); break;
            case 1: ops.push_back(qsim::gate::rx(q, th)); break;
            case 2: ops.push_back(qsim::gate::ry(q, th)); break;
            case 3: ops.push_back(qsim::gate::rz(q, th)); break;
            case 4: {
                int t = static_cast<int>(rng.uniform_int(k - 1));
                if (t >= q) ++t;
                ops.push_back(qsim::gate::cnot(q, t));
                break;
            }
            default: {
                int j = static_cast<int>(rng.uniform_int(k - 1));
                if (j >= q) ++j;
                ops.push_back(qsim::gate::rzz(q, j, th));
                break;
            }
        }
    }
    return ops;
}

/// Relabels a TSP instance: city i of the result is city perm[i] of the
/// original, i.e. w'(i,j) = w(perm[i], perm[j]).
inline tsp::TspInstance permute_instance(const tsp::TspInstance& inst,
                                         const std::vector<int>& perm) {
    tsp::TspInstance out = inst;
    for (int i = 0; i < inst.k; ++i)
        for (int j = 0; j < inst.k; ++j) out.w(i, j) = inst.w(perm[i], perm[j]);
    if (!inst.coords.empty()) {
        for (int i = 0; i < inst.k; ++i) {
            out.coords[2 * i] = inst.coords[2 * perm[i]];
            out.coords[2 * i + 1] = inst.coords[2 * perm[i] + 1];
        }
    }
    return out;
}

inline std::vector<int> random_permutation(int k, Rng& rng) {
    std::vector<int> p(k);
    for (int i = 0; i < k; ++i) p[i] = i;
    for (int i = k - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.uniform_int(i + 1));
        std::swap(p[i], p[j]);
    }
    return p;
}

}  // namespace qtest
