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

#include <catch2/catch_amalgamated.hpp>

#include "qtransfer/qsim.hpp"
#include "test_util.hpp"

using namespace qtransfer;
using qsim::cx;

TEST_CASE("zero_state basis states and range checks") {
    const auto s1 = qsim::zero_state(1);
    REQUIRE(s1.amplitudes == std::vector<cx>{cx{1, 0}, cx{0, 0}});
    const auto s2 = qsim::zero_state(2);
    REQUIRE(s2.dim() == 4);
    REQUIRE(s2.amplitudes[0] == cx{1, 0});
    for (std::size_t i = 1; i < 4; ++i) REQUIRE(s2.amplitudes[i] == cx{0, 0});
    REQUIRE_THROWS_AS(qsim::zero_state(17), std::out_of_range);
    REQUIRE_THROWS_AS(qsim::zero_state(0), std::out_of_range);
}

TEST_CASE("hadamard on |0> gives equal superposition") {
    const auto s = qsim::apply_gate(qsim::zero_state(1), qsim::gate::h(0));
    const double r = 0.7071067811865475;
    REQUIRE_THAT(s.amplitudes[0].real(), Catch::Matchers::WithinAbs(r, 1e-15));
    REQUIRE_THAT(s.amplitudes[1].real(), Catch::Matchers::WithinAbs(r, 1e-15));
    REQUIRE_THAT(std::fabs(s.amplitudes[0].imag()), Catch::Matchers::WithinAbs(0.0, 1e-15));
}

TEST_CASE("rx(pi) flips the qubit up to phase") {
    const auto s = qsim::apply_gate(qsim::zero_state(1), qsim::gate::rx(0, M_PI));
    REQUIRE_THAT(qsim::expectation_z(s, qsim::Observable::z(0)),
                 Catch::Matchers::WithinAbs(-1.0, 1e-12));
}

TEST_CASE("expectation_z eigenstates and parity") {
    const auto zero = qsim::zero_state(1);
    REQUIRE_THAT(qsim::expectation_z(zero, qsim::Observable::z(0)),
                 Catch::Matchers::WithinAbs(1.0, 1e-15));
    const auto one = qsim::apply_gate(zero, qsim::gate::rx(0, M_PI));
    REQUIRE_THAT(qsim::expectation_z(one, qsim::Observable::z(0)),
                 Catch::Matchers::WithinAbs(-1.0, 1e-12));

    // Bell pair: H then CNOT.
    auto bell = qsim::zero_state(2);
    qsim::apply_in_place(bell, qsim::gate::h(0));
    qsim::apply_in_place(bell, qsim::gate::cnot(0, 1));
    REQUIRE_THAT(qsim::expectation_z(bell, qsim::Observable::zz(0, 1)),
                 Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(qsim::expectation_z(bell, qsim::Observable::z(0)),
                 Catch::Matchers::WithinAbs(0.0, 1e-12));

    qsim::Observable bad;
    bad.terms.push_back({1.0, 1u << 3});
    REQUIRE_THROWS_AS(qsim::expectation_z(bell, bad), std::out_of_range);
}

TEST_CASE("observable operator norm") {
    qsim::Observable z0 = qsim::Observable::z(0);
    z0.terms[0].coeff = -0.375;
    REQUIRE_THAT(z0.operator_norm(), Catch::Matchers::WithinAbs(0.375, 1e-15));
    // Z0 + Z1 has eigenvalues {-2, 0, 2}.
    qsim::Observable two{{{1.0, 1u}, {1.0, 2u}}};
    REQUIRE_THAT(two.operator_norm(), Catch::Matchers::WithinAbs(2.0, 1e-15));
}

TEST_CASE("rzz never changes basis probabilities") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int k = 2 + static_cast<int>(rng.uniform_int(5));
        auto circ = qtest::random_circuit(k, 12, rng);
        auto s = qsim::run_circuit(circ, k);
        auto before = s;
        const int i = static_cast<int>(rng.uniform_int(k));
        int j = static_cast<int>(rng.uniform_int(k - 1));
        if (j >= i) ++j;
        qsim::apply_in_place(s, qsim::gate::rzz(i, j, rng.uniform(-M_PI, M_PI)));
        for (std::size_t b = 0; b < s.dim(); ++b)
            REQUIRE_THAT(std::norm(s.amplitudes[b]),
                         Catch::Matchers::WithinAbs(std::norm(before.amplitudes[b]), 1e-12));
    }
}

TEST_CASE("norm preservation over random circuits") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = 1 + static_cast<int>(rng.uniform_int(8));
        const int depth = 1 + static_cast<int>(rng.uniform_int(40));
        const auto s = qsim::run_circuit(qtest::random_circuit(k, depth, rng), k);
        REQUIRE_THAT(qsim::norm_sq(s), Catch::Matchers::WithinAbs(1.0, 1e-9));
    }
}

TEST_CASE("dense_unitary basics") {
    const auto id = qsim::dense_unitary({}, 1);
    REQUIRE(id.at(0, 0) == cx{1, 0});
    REQUIRE(id.at(1, 1) == cx{1, 0});
    REQUIRE(id.at(0, 1) == cx{0, 0});

    const std::vector<qsim::GateOp> h = {qsim::gate::h(0)};
    const auto hu = qsim::dense_unitary(h, 1);
    const double r = 0.7071067811865475;
    REQUIRE_THAT(hu.at(0, 0).real(), Catch::Matchers::WithinAbs(r, 1e-15));
    REQUIRE_THAT(hu.at(1, 1).real(), Catch::Matchers::WithinAbs(-r, 1e-15));

    const std::vector<qsim::GateOp> hh = {qsim::gate::h(0), qsim::gate::h(0)};
    const auto hhu = qsim::dense_unitary(hh, 1);
    REQUIRE_THAT(std::abs(hhu.at(0, 0) - cx{1, 0}), Catch::Matchers::WithinAbs(0.0, 1e-12));
    REQUIRE_THAT(std::abs(hhu.at(0, 1)), Catch::Matchers::WithinAbs(0.0, 1e-12));

    REQUIRE_THROWS_AS(qsim::dense_unitary({}, 11), std::out_of_range);
}

TEST_CASE("dense_unitary is unitary on random circuits") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const int k = 1 + static_cast<int>(rng.uniform_int(6));
        const auto u = qsim::dense_unitary(qtest::random_circuit(k, 15, rng), k);
        const auto gram = qsim::matmul(qsim::adjoint(u), u);
        const auto eye = qsim::Cmat::identity(u.dim);
        for (std::size_t i = 0; i < u.dim; ++i)
            for (std::size_t j = 0; j < u.dim; ++j)
                REQUIRE_THAT(std::abs(gram.at(i, j) - eye.at(i, j)),
                             Catch::Matchers::WithinAbs(0.0, 1e-8));
    }
}

TEST_CASE("gate application agrees with dense unitary") {
    Rng rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        const int k = 1 + static_cast<int>(rng.uniform_int(6));
        const auto circ = qtest::random_circuit(k, 20, rng);
        const auto via_gates = qsim::run_circuit(circ, k);
        const auto u = qsim::dense_unitary(circ, k);
        for (std::size_t row = 0; row < u.dim; ++row)
            REQUIRE_THAT(std::abs(via_gates.amplitudes[row] - u.at(row, 0)),
                         Catch::Matchers::WithinAbs(0.0, 1e-9));
    }
}

TEST_CASE("operator_norm on known matrices") {
    REQUIRE_THAT(qsim::operator_norm(qsim::Cmat::identity(8)),
                 Catch::Matchers::WithinAbs(1.0, 1e-8));
    REQUIRE_THAT(qsim::operator_norm(qsim::Cmat(6)), Catch::Matchers::WithinAbs(0.0, 1e-12));
    qsim::Cmat d(2);
    d.at(0, 0) = cx{0.1, 0};
    d.at(1, 1) = cx{2.0, 0};
    REQUIRE_THAT(qsim::operator_norm(d), Catch::Matchers::WithinAbs(2.0, 1e-7));
}

TEST_CASE("gate index bounds are enforced") {
    auto s = qsim::zero_state(2);
    REQUIRE_THROWS_AS(qsim::apply_in_place(s, qsim::gate::h(2)), std::out_of_range);
    REQUIRE_THROWS_AS(qsim::apply_in_place(s, qsim::gate::rzz(0, 0, 0.3)), std::invalid_argument);
    REQUIRE_THROWS_AS(qsim::apply_in_place(s, qsim::gate::cnot(1, 1)), std::invalid_argument);
}
