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
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "qtransfer/common.hpp"

namespace qtransfer::qsim {

using cx = std::complex<double>;

inline constexpr int kMaxQubits = 16;       // 2^16 amplitudes cap
inline constexpr int kMaxDenseQubits = 10;  // dense-matrix cost guard
inline constexpr std::size_t kMaxNormDim = 1024;

/// Full state vector of a k-qubit register. Qubit 0 is the least-significant
/// bit of the basis index.
struct StateVector {
    int num_qubits = 0;
    std::vector<cx> amplitudes;

    std::size_t dim() const { return amplitudes.size(); }
};

/// Squared-amplitude sum; 1 within 1e-10 for any valid state.
inline double norm_sq(const StateVector& s) {
    double acc = 0.0;
    for (const cx& a : s.amplitudes) acc += std::norm(a);
    return acc;
}

inline StateVector zero_state(int k) {
    if (k < 1 || k > kMaxQubits)
        throw std::out_of_range("zero_state: qubit count must be in 1..16");
    StateVector s;
    s.num_qubits = k;
    s.amplitudes.assign(std::size_t{1} << k, cx{0.0, 0.0});
    s.amplitudes[0] = cx{1.0, 0.0};
    return s;
}

enum class GateKind : std::uint8_t { H, RX, RY, RZ, CNOT, RZZ };

/// One circuit element. Rotations use the standard half-angle convention
/// R_A(th) = exp(-i th/2 A); RZZ uses the full angle, RZZ(th) = exp(-i th Z_i Z_j),
/// matching the cost-layer parameterization of the EQC ansatz.
struct GateOp {
    GateKind kind;
    int q0 = 0;       // target (or first qubit of RZZ, or CNOT control)
    int q1 = 0;       // CNOT target / second RZZ qubit
    double angle = 0.0;
};

namespace gate {
inline GateOp h(int q) { return {GateKind::H, q, 0, 0.0}; }
inline GateOp rx(int q, double th) { return {GateKind::RX, q, 0, th}; }
inline GateOp ry(int q, double th) { return {GateKind::RY, q, 0, th}; }
inline GateOp rz(int q, double th) { return {GateKind::RZ, q, 0, th}; }
inline GateOp cnot(int control, int target) { return {GateKind::CNOT, control, target, 0.0}; }
inline GateOp rzz(int i, int j, double th) { return {GateKind::RZZ, i, j, th}; }
}  // namespace gate

namespace detail {

inline void check_qubit(int q, int num_qubits, const char* what) {
    if (q < 0 || q >= num_qubits) throw std::out_of_range(what);
}

/// Applies the 2x2 matrix [[m00,m01],[m10,m11]] to the target qubit.
inline void apply_1q(StateVector& s, int q, cx m00, cx m01, cx m10, cx m11) {
    const std::size_t stride = std::size_t{1} << q;
    const std::size_t dim = s.dim();
    cx* a = s.amplitudes.data();
    for (std::size_t base = 0; base < dim; base += 2 * stride) {
        for (std::size_t i = base; i < base + stride; ++i) {
            const cx a0 = a[i];
            const cx a1 = a[i + stride];
            a[i] = m00 * a0 + m01 * a1;
            a[i + stride] = m10 * a0 + m11 * a1;
        }
    }
}

inline void apply_cnot(StateVector& s, int control, int target) {
    const std::size_t cbit = std::size_t{1} << control;
    const std::size_t tbit = std::size_t{1} << target;
    const std::size_t dim = s.dim();
    cx* a = s.amplitudes.data();
    for (std::size_t i = 0; i < dim; ++i) {
        if ((i & cbit) && !(i & tbit)) std::swap(a[i], a[i | tbit]);
    }
}

inline void apply_rzz(StateVector& s, int qi, int qj, double th) {
    const std::size_t bi = std::size_t{1} << qi;
    const std::size_t bj = std::size_t{1} << qj;
    const cx even{std::cos(th), -std::sin(th)};  // z_i z_j = +1
    const cx odd = std::conj(even);              // z_i z_j = -1
    const std::size_t dim = s.dim();
    cx* a = s.amplitudes.data();
    for (std::size_t i = 0; i < dim; ++i) {
        const bool same = ((i & bi) != 0) == ((i & bj) != 0);
        a[i] *= same ? even : odd;
    }
}

}  // namespace detail

inline void apply_in_place(StateVector& s, const GateOp& g) {
    const int k = s.num_qubits;
    switch (g.kind) {
        case GateKind::H: {
            detail::check_qubit(g.q0, k, "H: qubit out of range");
            const double r = 1.0 / std::sqrt(2.0);
            detail::apply_1q(s, g.q0, {r, 0}, {r, 0}, {r, 0}, {-r, 0});
            break;
        }
        case GateKind::RX: {
            detail::check_qubit(g.q0, k, "RX: qubit out of range");
            const double c = std::cos(0.5 * g.angle);
            const double sn = std::sin(0.5 * g.angle);
            detail::apply_1q(s, g.q0, {c, 0}, {0, -sn}, {0, -sn}, {c, 0});
            break;
        }
        case GateKind::RY: {
            detail::check_qubit(g.q0, k, "RY: qubit out of range");
            const double c = std::cos(0.5 * g.angle);
            const double sn = std::sin(0.5 * g.angle);
            detail::apply_1q(s, g.q0, {c, 0}, {-sn, 0}, {sn, 0}, {c, 0});
            break;
        }
        case GateKind::RZ: {
            detail::check_qubit(g.q0, k, "RZ: qubit out of range");
            const cx e0{std::cos(0.5 * g.angle), -std::sin(0.5 * g.angle)};
            detail::apply_1q(s, g.q0, e0, {0, 0}, {0, 0}, std::conj(e0));
            break;
        }
        case GateKind::CNOT: {
            detail::check_qubit(g.q0, k, "CNOT: control out of range");
            detail::check_qubit(g.q1, k, "CNOT: target out of range");
            if (g.q0 == g.q1) throw std::invalid_argument("CNOT: control equals target");
            detail::apply_cnot(s, g.q0, g.q1);
            break;
        }
        case GateKind::RZZ: {
            detail::check_qubit(g.q0, k, "RZZ: qubit out of range");
            detail::check_qubit(g.q1, k, "RZZ: qubit out of range");
            if (g.q0 == g.q1) throw std::invalid_argument("RZZ: qubits must differ");
            detail::apply_rzz(s, g.q0, g.q1, g.angle);
            break;
        }
    }
}

inline StateVector apply_gate(StateVector s, const GateOp& g) {
    apply_in_place(s, g);
    return s;
}

inline void run_in_place(StateVector& s, std::span<const GateOp> circuit) {
    for (const GateOp& g : circuit) apply_in_place(s, g);
}

inline StateVector run_circuit(std::span<const GateOp> circuit, int k) {
    StateVector s = zero_state(k);
    run_in_place(s, circuit);
    return s;
}

/// Sum of Pauli-Z product terms: coefficient * prod_{q in support} Z_q.
/// Support is a bitmask over qubit indices.
struct Observable {
    struct Term {
        double coeff;
        std::uint32_t support;
    };
    std::vector<Term> terms;

    static Observable z(int q) { return {{{1.0, std::uint32_t{1} << q}}}; }
    static Observable zz(int i, int j) {
        return {{{1.0, (std::uint32_t{1} << i) | (std::uint32_t{1} << j)}}};
    }

    /// Exact operator norm: max over computational-basis eigenvalues, which
    /// for Z-products only depends on the bits inside the union support.
    double operator_norm() const {
        std::uint32_t unionmask = 0;
        for (const Term& t : terms) unionmask |= t.support;
        std::vector<int> bits;
        for (int b = 0; b < 32; ++b)
            if (unionmask & (std::uint32_t{1} << b)) bits.push_back(b);
        double best = 0.0;
        for (std::uint64_t assign = 0; assign < (std::uint64_t{1} << bits.size()); ++assign) {
            std::uint32_t ones = 0;
            for (std::size_t i = 0; i < bits.size(); ++i)
                if (assign & (std::uint64_t{1} << i)) ones |= std::uint32_t{1} << bits[i];
            double v = 0.0;
            for (const Term& t : terms) {
                const int parity = __builtin_popcount(t.support & ones) & 1;
                v += parity ? -t.coeff : t.coeff;
            }
            best = std::max(best, std::fabs(v));
        }
        return best;
    }
};

inline double expectation_z(const StateVector& s, const Observable& obs) {
    const std::uint32_t dimmask = static_cast<std::uint32_t>(s.dim() - 1);
    for (const Observable::Term& t : obs.terms)
        if (t.support & ~dimmask)
            throw std::out_of_range("expectation_z: observable support out of range");
    double total = 0.0;
    for (const Observable::Term& t : obs.terms) {
        double acc = 0.0;
        const cx* a = s.amplitudes.data();
        const std::size_t dim = s.dim();
        for (std::size_t i = 0; i < dim; ++i) {
            const double p = std::norm(a[i]);
            acc += (__builtin_popcount(static_cast<std::uint32_t>(i) & t.support) & 1) ? -p : p;
        }
        total += t.coeff * acc;
    }
    return total;
}

/// Dense square complex matrix, row-major.
struct Cmat {
    std::size_t dim = 0;
    std::vector<cx> a;

    Cmat() = default;
    explicit Cmat(std::size_t d) : dim(d), a(d * d, cx{0, 0}) {}

    cx& at(std::size_t r, std::size_t c) { return a[r * dim + c]; }
    const cx& at(std::size_t r, std::size_t c) const { return a[r * dim + c]; }

    static Cmat identity(std::size_t d) {
        Cmat m(d);
        for (std::size_t i = 0; i < d; ++i) m.at(i, i) = cx{1, 0};
        return m;
    }
};

inline Cmat operator-(const Cmat& x, const Cmat& y) {
    if (x.dim != y.dim) throw std::invalid_argument("matrix dims differ");
    Cmat r(x.dim);
    for (std::size_t i = 0; i < x.a.size(); ++i) r.a[i] = x.a[i] - y.a[i];
    return r;
}

inline Cmat adjoint(const Cmat& m) {
    Cmat r(m.dim);
    for (std::size_t i = 0; i < m.dim; ++i)
        for (std::size_t j = 0; j < m.dim; ++j) r.at(j, i) = std::conj(m.at(i, j));
    return r;
}

inline Cmat matmul(const Cmat& x, const Cmat& y) {
    if (x.dim != y.dim) throw std::invalid_argument("matrix dims differ");
    Cmat r(x.dim);
    for (std::size_t i = 0; i < x.dim; ++i)
        for (std::size_t l = 0; l < x.dim; ++l) {
            const cx v = x.at(i, l);
            if (v == cx{0, 0}) continue;
            for (std::size_t j = 0; j < x.dim; ++j) r.at(i, j) += v * y.at(l, j);
        }
    return r;
}

/// Product of the circuit's gate matrices in application order, built by
/// evolving each basis column.
inline Cmat dense_unitary(std::span<const GateOp> circuit, int k) {
    if (k < 1 || k > kMaxDenseQubits)
        throw std::out_of_range("dense_unitary: qubit count must be in 1..10");
    const std::size_t dim = std::size_t{1} << k;
    Cmat u(dim);
    for (std::size_t col = 0; col < dim; ++col) {
        StateVector s;
        s.num_qubits = k;
        s.amplitudes.assign(dim, cx{0, 0});
        s.amplitudes[col] = cx{1, 0};
        run_in_place(s, circuit);
        for (std::size_t row = 0; row < dim; ++row) u.at(row, col) = s.amplitudes[row];
    }
    return u;
}

namespace detail {
inline std::vector<cx> matvec(const Cmat& m, const std::vector<cx>& v, bool conj_transpose) {
    std::vector<cx> out(m.dim, cx{0, 0});
    if (!conj_transpose) {
        for (std::size_t i = 0; i < m.dim; ++i) {
            cx acc{0, 0};
            const cx* row = m.a.data() + i * m.dim;
            for (std::size_t j = 0; j < m.dim; ++j) acc += row[j] * v[j];
            out[i] = acc;
        }
    } else {
        for (std::size_t i = 0; i < m.dim; ++i) {
            const cx vi = v[i];
            const cx* row = m.a.data() + i * m.dim;
            for (std::size_t j = 0; j < m.dim; ++j) out[j] += std::conj(row[j]) * vi;
        }
    }
    return out;
}

inline double vec_norm(const std::vector<cx>& v) {
    double acc = 0.0;
    for (const cx& x : v) acc += std::norm(x);
    return std::sqrt(acc);
}
}  // namespace detail

/// Largest singular value via power iteration on A^dagger A
/// (max 100 iterations, relative tolerance 1e-8).
inline double operator_norm(const Cmat& m) {
    if (m.dim == 0) return 0.0;
    if (m.dim > kMaxNormDim) throw std::out_of_range("operator_norm: dimension > 1024");
    if (m.a.size() != m.dim * m.dim) throw std::invalid_argument("operator_norm: non-square input");

    Rng rng(0xA11CEULL);
    std::vector<cx> v(m.dim);
    for (cx& x : v) x = cx{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    double vn = detail::vec_norm(v);
    for (cx& x : v) x /= vn;

    double sigma = 0.0;
    for (int it = 0; it < 100; ++it) {
        std::vector<cx> w = detail::matvec(m, v, false);
        const double wn = detail::vec_norm(w);
        if (wn < 1e-300) return 0.0;
        std::vector<cx> u = detail::matvec(m, w, true);
        const double un = detail::vec_norm(u);
        if (un < 1e-300) return wn;
        for (cx& x : u) x /= un;
        v = std::move(u);
        const double prev = sigma;
        sigma = wn;
        if (it > 0 && std::fabs(sigma - prev) <= 1e-8 * std::max(sigma, 1.0)) break;
    }
    // One final multiply so the estimate reflects the converged vector.
    return detail::vec_norm(detail::matvec(m, v, false));
}

}  // namespace qtransfer::qsim
