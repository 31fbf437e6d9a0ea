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

#include "qtransfer/harness.hpp"
#include "qtransfer/toml.hpp"

using namespace qtransfer;

TEST_CASE("toml parser handles the config schema") {
    const std::string text = R"(
# experiment grid
[experiment]
ansatz = ["eqc"]          # only the equivariant circuit
sources = [4, 6]
targets = [6, 8]
seeds = [0, 1, 2]
generator = "euclidean_unit_square"
eval_instances = 5
episodes_scratch = 12
episodes_finetune = 3
instance_mode = "fixed"
run_scratch_at_target = false
workers = 2

[hyperparams]
learning_rate = 0.02
eps_decay = 500.0
discount = 0.95

[bound]
mode = "firstprinciples"
delta = 0.1
)";
    const auto doc = toml::parse(text);
    REQUIRE(doc.get_string("experiment", "generator", "") == "euclidean_unit_square");
    REQUIRE(doc.get_int_array("experiment", "sources", {}) == std::vector<int>{4, 6});
    REQUIRE(doc.get_bool("experiment", "run_scratch_at_target", true) == false);
    REQUIRE(doc.get_double("hyperparams", "eps_decay", 0) == 500.0);
    REQUIRE(doc.get_int("experiment", "missing", 7) == 7);

    const auto cfg = harness::config_from_toml(doc);
    REQUIRE(cfg.kinds == std::vector<ansatz::AnsatzKind>{ansatz::AnsatzKind::EQC});
    REQUIRE(cfg.sources == std::vector<int>{4, 6});
    REQUIRE(cfg.targets == std::vector<int>{6, 8});
    REQUIRE(cfg.seeds.size() == 3);
    REQUIRE(cfg.generator == tsp::Generator::EuclideanUnitSquare);
    REQUIRE(cfg.eval_instances == 5);
    REQUIRE(cfg.episodes_scratch == 12);
    REQUIRE(cfg.hp.learning_rate == 0.02);
    REQUIRE(cfg.hp.eps_decay == 500.0);
    REQUIRE(cfg.hp.discount == 0.95);
    REQUIRE(cfg.hp.episodes == 12);
    REQUIRE(cfg.instance_mode == agent::InstanceMode::Fixed);
    REQUIRE_FALSE(cfg.run_scratch_at_target);
    REQUIRE(cfg.workers == 2);
    REQUIRE(cfg.bound.mode == "firstprinciples");
    REQUIRE(cfg.bound.delta == 0.1);
}

TEST_CASE("toml parser rejects malformed input") {
    REQUIRE_THROWS(toml::parse("key value\n"));
    REQUIRE_THROWS(toml::parse("[unclosed\n"));
    REQUIRE_THROWS(toml::parse("a = [1, 2\n"));
    REQUIRE_THROWS(toml::parse("a = \"oops\n"));
    REQUIRE_THROWS(toml::parse("a = 1 trailing\n"));
    REQUIRE_NOTHROW(toml::parse("a = 3  # comment with \"quote\"\n"));
    REQUIRE_NOTHROW(toml::parse("s = \"hash # inside\"\n"));
}

TEST_CASE("config validation catches bad grids") {
    harness::ExperimentConfig cfg;
    cfg.targets = {4};
    cfg.sources = {6};
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);  // target < min source
    cfg = {};
    cfg.sources = {2};
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.targets = {19};
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);  // beyond exact-solver cap
    cfg = {};
    cfg.bound.mode = "nonsense";
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    REQUIRE_NOTHROW(cfg.validate());
}

TEST_CASE("cell enumeration matches the documented set") {
    harness::ExperimentConfig cfg;
    cfg.kinds = {ansatz::AnsatzKind::EQC};
    cfg.sources = {4};
    cfg.targets = {6};
    cfg.seeds = {0};
    const auto jobs = harness::enumerate_cells(cfg);
    // scratch@4, scratch@6, zero_shot 4->6, finetune 4->6, 3 baselines@6.
    REQUIRE(jobs.size() == 7);
    int scratch = 0, zero = 0, fine = 0, base = 0;
    for (const auto& j : jobs) {
        switch (j.job) {
            case harness::JobKind::Scratch: ++scratch; break;
            case harness::JobKind::ZeroShot: ++zero; break;
            case harness::JobKind::Finetune: ++fine; break;
            case harness::JobKind::Baseline: ++base; break;
        }
        REQUIRE(!j.run_id.empty());
        REQUIRE(!j.descriptor.empty());
    }
    REQUIRE(scratch == 2);
    REQUIRE(zero == 1);
    REQUIRE(fine == 1);
    REQUIRE(base == 3);

    // run_ids are unique and deterministic.
    const auto again = harness::enumerate_cells(cfg);
    for (std::size_t i = 0; i < jobs.size(); ++i) REQUIRE(jobs[i].run_id == again[i].run_id);
}

TEST_CASE("zero-shot at the source size is enumerated when targeted") {
    harness::ExperimentConfig cfg;
    cfg.kinds = {ansatz::AnsatzKind::EQC};
    cfg.sources = {4};
    cfg.targets = {4};
    cfg.seeds = {0};
    cfg.run_finetune = false;
    cfg.run_baselines = false;
    cfg.run_scratch_at_target = false;
    const auto jobs = harness::enumerate_cells(cfg);
    REQUIRE(jobs.size() == 2);  // scratch@4 + zero_shot 4->4 (no finetune at m == n)
}
