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
#include <optional>
#include <stdexcept>
#include <vector>

#include "qtransfer/common.hpp"
#include "qtransfer/qsim.hpp"

namespace qtransfer::bound {

/// Beardwood-Halton-Hammersley coefficient for uniform points in the unit
/// square (optimal tour length ~ beta2 * sqrt(k)).
inline constexpr double kBhhBeta2 = 0.712;

/// Everything on the right-hand side of the transfer bound.
struct BoundInputs {
    int n = 1;
    int m = 1;
    double theta_l1 = 0.0;   // ||theta*_n||_1
    double theta_max = 0.0;  // max_l |theta_l|
    double a_norm = 1.0;     // ||A||_op of the local generator terms
    double l_u = 2.0;        // performance Lipschitz constant in the unitary
    double c_prime = 0.0;    // structural constant C'
    long m_episodes = 1;     // M_n
    double delta = 0.05;
    std::optional<double> alpha_n;  // consolidated parametric coefficient

    void validate() const {
        if (n < 1 || m < n) throw std::invalid_argument("BoundInputs: need m >= n >= 1");
        if (theta_l1 < 0 || theta_max < 0 || a_norm < 0 || l_u < 0 || c_prime < 0)
            throw std::invalid_argument("BoundInputs: norms must be >= 0");
        if (m_episodes < 1) throw std::invalid_argument("BoundInputs: m_episodes >= 1");
        if (!(delta > 0 && delta < 1)) throw std::invalid_argument("BoundInputs: delta in (0,1)");
    }
};

struct BoundResult {
    unsigned long long t_tet = 0;
    double gen_error = 0.0;
    double d_param = 0.0;
    double d_struct = 0.0;
    double d_total = 0.0;
    double lower_bound = 0.0;
};

/// Dimension of the S_n-equivariant unitary submanifold: C(n+3, 3).
inline unsigned long long tetrahedral(int n) {
    if (n < 1) throw std::invalid_argument("tetrahedral: n >= 1");
    const unsigned long long a = n + 1, b = n + 2, c = n + 3;
    return a * b * c / 6;
}

/// sqrt(T/M) + sqrt(ln(1/delta)/M) with the big-O constant set to 1,
/// clamped to [0, 1].
inline double gen_error(int n, long m_episodes, double delta) {
    if (m_episodes < 1) throw std::invalid_argument("gen_error: m_episodes >= 1");
    if (!(delta > 0 && delta < 1)) throw std::invalid_argument("gen_error: delta in (0,1)");
    const double M = static_cast<double>(m_episodes);
    const double g = std::sqrt(static_cast<double>(tetrahedral(n)) / M) +
                     std::sqrt(std::log(1.0 / delta) / M);
    return std::clamp(g, 0.0, 1.0);
}

/// Parametric mismatch penalty. First-principles form
/// L_U * ||theta||_1 * e^{theta_max ||A||} * 2 ||A|| * (m-n)/m, or the
/// consolidated alpha_n * (m-n)/m when alpha_n is provided.
inline double d_param(const BoundInputs& in) {
    in.validate();
    const double frac = static_cast<double>(in.m - in.n) / in.m;
    if (in.alpha_n) return *in.alpha_n * frac;
    return in.l_u * in.theta_l1 * std::exp(in.theta_max * in.a_norm) * 2.0 * in.a_norm * frac;
}

/// Structural shift penalty C' * (m-n)/sqrt(n).
inline double d_struct(int n, int m, double c_prime) {
    if (n < 1 || m < n) throw std::invalid_argument("d_struct: need m >= n >= 1");
    if (c_prime < 0) throw std::invalid_argument("d_struct: c_prime >= 0");
    return c_prime * static_cast<double>(m - n) / std::sqrt(static_cast<double>(n));
}

/// C' ~= beta2 / (2 (L_max - L_opt)) from the BHH scaling.
inline double estimate_c_prime(double l_max_mean, double l_opt_mean) {
    if (!(l_max_mean > l_opt_mean))
        throw std::invalid_argument("estimate_c_prime: need l_max_mean > l_opt_mean");
    return kBhhBeta2 / (2.0 * (l_max_mean - l_opt_mean));
}

struct AlphaRecord {
    int n = 0;
    int m = 0;
    double empirical_gap = 0.0;  // struct term already subtracted, clamped >= 0
};

/// Least-squares slope through the origin of gap against (m-n)/m,
/// clamped at 0.
inline double fit_alpha(const std::vector<AlphaRecord>& records) {
    double sxy = 0.0, sxx = 0.0;
    bool usable = false;
    for (const AlphaRecord& r : records) {
        if (r.m <= r.n) continue;
        usable = true;
        const double x = static_cast<double>(r.m - r.n) / r.m;
        sxy += x * r.empirical_gap;
        sxx += x * x;
    }
    if (!usable) throw std::invalid_argument("fit_alpha: no records with m > n");
    if (sxx == 0.0) return 0.0;
    return std::max(0.0, sxy / sxx);
}

/// P_m >= p_hat_n - G_n(delta) - D_param - D_struct. The lower bound is not
/// clamped; plots clamp for display only.
inline BoundResult transfer_lower_bound(double p_hat_n, const BoundInputs& in) {
    if (!(p_hat_n >= 0.0 && p_hat_n <= 1.0))
        throw std::invalid_argument("transfer_lower_bound: p_hat_n in [0,1]");
    in.validate();
    BoundResult r;
    r.t_tet = tetrahedral(in.n);
    r.gen_error = gen_error(in.n, in.m_episodes, in.delta);
    r.d_param = d_param(in);
    r.d_struct = d_struct(in.n, in.m, in.c_prime);
    r.d_total = r.d_param + r.d_struct;
    r.lower_bound = p_hat_n - r.gen_error - r.d_total;
    return r;
}

// ---------------------------------------------------------------------------
// Numerical verification of the unitary-deviation inequalities
// ---------------------------------------------------------------------------

/// Canonical pooled S_k-equivariant generator families.
enum class GenFamily : std::uint8_t { XPool, ZZPool };

inline GenFamily family_at_layer(std::size_t layer) {
    return (layer % 2 == 0) ? GenFamily::XPool : GenFamily::ZZPool;
}

/// Dense Hermitian matrix of the pooled generator on k qubits:
///   XPool:  (1/k) sum_j X_j
///   ZZPool: (2/(k(k-1))) sum_{i<j} Z_i Z_j
inline qsim::Cmat dense_generator(int k, GenFamily family) {
    const std::size_t dim = std::size_t{1} << k;
    qsim::Cmat h(dim);
    if (family == GenFamily::XPool) {
        const double c = 1.0 / k;
        for (std::size_t i = 0; i < dim; ++i)
            for (int j = 0; j < k; ++j) h.at(i ^ (std::size_t{1} << j), i) += qsim::cx{c, 0};
    } else {
        const double c = 2.0 / (static_cast<double>(k) * (k - 1));
        for (std::size_t i = 0; i < dim; ++i) {
            const int s = k - 2 * __builtin_popcountll(i);
            const double pairsum = 0.5 * (static_cast<double>(s) * s - k);
            h.at(i, i) = qsim::cx{c * pairsum, 0};
        }
    }
    return h;
}

/// Embeds an operator on the low n qubits of an m-qubit register
/// (identity on the rest).
inline qsim::Cmat lift(const qsim::Cmat& u, int n, int m) {
    if (m < n) throw std::invalid_argument("lift: m >= n required");
    const std::size_t dlow = std::size_t{1} << n;
    if (u.dim != dlow) throw std::invalid_argument("lift: dimension mismatch");
    const std::size_t dim = std::size_t{1} << m;
    qsim::Cmat out(dim);
    const std::size_t lowmask = dlow - 1;
    for (std::size_t i = 0; i < dim; ++i) {
        const std::size_t ihigh = i >> n;
        for (std::size_t jlow = 0; jlow < dlow; ++jlow)
            out.at(i, (ihigh << n) | jlow) = u.at(i & lowmask, jlow);
    }
    return out;
}

/// Circuit realizing exp(-i theta H) for a pooled generator (the pooled terms
/// commute, so the exponential factors exactly into native gates).
inline std::vector<qsim::GateOp> generator_layer_circuit(int k, GenFamily family, double theta) {
    std::vector<qsim::GateOp> ops;
    if (family == GenFamily::XPool) {
        for (int q = 0; q < k; ++q) ops.push_back(qsim::gate::rx(q, 2.0 * theta / k));
    } else {
        const double a = 2.0 * theta / (static_cast<double>(k) * (k - 1));
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j) ops.push_back(qsim::gate::rzz(i, j, a));
    }
    return ops;
}

inline qsim::Cmat generator_unitary(int k, const std::vector<double>& theta) {
    std::vector<qsim::GateOp> circuit;
    for (std::size_t l = 0; l < theta.size(); ++l) {
        const auto layer = generator_layer_circuit(k, family_at_layer(l), theta[l]);
        circuit.insert(circuit.end(), layer.begin(), layer.end());
    }
    return qsim::dense_unitary(circuit, k);
}

struct Step1Check {
    double measured = 0.0;  // ||H^(m) - H^(n) (x) I||_op, dense computation
    double bound = 0.0;     // analytic pooled-term bound
};

/// Generator-difference inequality (telescoping step 1). The analytic bound
/// is 2 (P_m - P_n)/P_m * ||A|| with P_k the pooled term count of the family
/// (k for XPool, C(k,2) for ZZPool).
inline Step1Check step1_generator_gap(int n, int m, GenFamily family, double a_norm = 1.0) {
    if (m > qsim::kMaxDenseQubits) throw std::out_of_range("step1_generator_gap: m > 10");
    if (n < 1 || m < n) throw std::invalid_argument("step1_generator_gap: need m >= n >= 1");
    Step1Check c;
    c.measured =
        qsim::operator_norm(dense_generator(m, family) - lift(dense_generator(n, family), n, m));
    const double pn = family == GenFamily::XPool ? n : 0.5 * n * (n - 1);
    const double pm = family == GenFamily::XPool ? m : 0.5 * m * (m - 1);
    c.bound = 2.0 * (pm - pn) / pm * a_norm;
    return c;
}

struct DeviationReport {
    std::vector<double> theta;
    double true_deviation = 0.0;
    double analytic_bound = 0.0;
    double slack = 0.0;  // bound - true, >= 0 when the inequality holds

    bool holds() const { return true_deviation <= analytic_bound + 1e-9; }
};

/// Compares the exact operator-norm deviation ||U_m(theta) - U_n(theta) (x) I||
/// against the layerwise telescoping bound
/// sum_l |theta_l| ||H_l^(m) - H_l^(n) (x) I|| e^{|theta_l| ||A||}.
inline DeviationReport verify_unitary_deviation(int n, int m, const std::vector<double>& theta,
                                                double a_norm = 1.0) {
    if (m > qsim::kMaxDenseQubits) throw std::out_of_range("verify_unitary_deviation: m > 10");
    if (n < 1 || m < n) throw std::invalid_argument("verify_unitary_deviation: need m >= n >= 1");
    DeviationReport rep;
    rep.theta = theta;
    const qsim::Cmat um = generator_unitary(m, theta);
    const qsim::Cmat un_lifted = lift(generator_unitary(n, theta), n, m);
    rep.true_deviation = qsim::operator_norm(um - un_lifted);
    double gap_cache[2] = {-1.0, -1.0};
    for (std::size_t l = 0; l < theta.size(); ++l) {
        const GenFamily fam = family_at_layer(l);
        double& gap = gap_cache[fam == GenFamily::XPool ? 0 : 1];
        if (gap < 0.0)
            gap = qsim::operator_norm(dense_generator(m, fam) -
                                      lift(dense_generator(n, fam), n, m));
        rep.analytic_bound += std::fabs(theta[l]) * gap * std::exp(std::fabs(theta[l]) * a_norm);
    }
    rep.slack = rep.analytic_bound - rep.true_deviation;
    return rep;
}

/// Randomized trials with theta drawn uniformly from [-pi, pi]^depth.
inline std::vector<DeviationReport> verify_unitary_deviation_random(int n, int m, int depth,
                                                                    int trials,
                                                                    std::uint64_t seed) {
    std::vector<DeviationReport> reports;
    reports.reserve(trials);
    Rng rng(seed);
    for (int t = 0; t < trials; ++t) {
        std::vector<double> theta(depth);
        for (double& th : theta) th = rng.uniform(-M_PI, M_PI);
        reports.push_back(verify_unitary_deviation(n, m, theta));
    }
    return reports;
}

}  // namespace qtransfer::bound
