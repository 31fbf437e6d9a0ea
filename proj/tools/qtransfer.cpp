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

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qtransfer/agent.hpp"
#include "qtransfer/bound.hpp"
#include "qtransfer/harness.hpp"
#include "qtransfer/report.hpp"
#include "qtransfer/store.hpp"
#include "qtransfer/toml.hpp"

namespace fs = std::filesystem;
using namespace qtransfer;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;      // config / IO errors
constexpr int kExitInvariant = 2;  // invariant violations in inputs

std::string now_iso8601() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

harness::ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) return harness::ExperimentConfig{};
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return harness::config_from_toml(toml::parse(text));
}

int cmd_gen(int k, const std::string& generator, std::uint64_t seed, const std::string& out,
            bool solve) {
    const auto inst = tsp::gen_instance(k, tsp::generator_from_string(generator), seed);
    nlohmann::json j = inst;
    if (out.empty() || out == "-") {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream of(out);
        if (!of) throw std::runtime_error("cannot write " + out);
        of << j.dump(2) << "\n";
        std::cout << "wrote " << out << "\n";
    }
    if (solve) {
        const auto norm = tsp::make_normalizer(inst);
        const std::string run_id = hex64(fnv1a64(j.dump()));
        const auto row = [&](const std::string& solver, double len) {
            std::cout << tsp::tour_csv_row(run_id, k, solver, len,
                                           tsp::normalize_performance(len, norm))
                      << "\n";
        };
        std::cout << tsp::kToursHeader << "\n";
        row("optimal", norm.l_opt);
        row("nn", norm.l_max);
        row("christofides", tsp::christofides_like(inst).tour.length);
    }
    return kExitOk;
}

int cmd_train(const std::string& config_path, int k, const std::string& kind_str, int layers,
              int episodes, std::uint64_t seed, const std::string& generator,
              const std::string& out_dir) {
    harness::ExperimentConfig cfg = load_config(config_path);
    agent::TrainConfig tc;
    tc.k = k;
    tc.kind = ansatz::kind_from_string(kind_str);
    tc.layers = layers > 0 ? layers : cfg.layers;
    tc.generator = generator.empty() ? cfg.generator : tsp::generator_from_string(generator);
    tc.hp = cfg.hp;
    if (episodes >= 0) tc.hp.episodes = episodes;
    tc.instance_mode = cfg.instance_mode;
    tc.seed = seed;

    const auto out = agent::train(tc);
    fs::create_directories(out_dir);
    ansatz::Checkpoint ck;
    ck.params = out.params;
    nlohmann::json hj;
    agent::to_json(hj, tc.hp);
    ck.hyperparams = hj;
    ck.hyperparams["rng"] = kRngAlgorithm;
    ck.hyperparams["instance_mode"] = agent::to_string(tc.instance_mode);
    ck.seed = seed;
    ck.created_at = now_iso8601();
    const auto ck_path = fs::path(out_dir) / "checkpoint.json";
    ansatz::save_checkpoint(ck, ck_path.string());
    const auto tel_path = fs::path(out_dir) / "telemetry.csv";
    harness::detail::write_telemetry(tel_path, out.telemetry);
    std::cout << "trained " << kind_str << " on k=" << k << " for " << tc.hp.episodes
              << " episodes\n"
              << "checkpoint: " << ck_path.string() << "\n"
              << "telemetry:  " << tel_path.string() << "\n";
    if (!out.telemetry.empty()) {
        const int tail = std::min<std::size_t>(100, out.telemetry.size());
        double mean = 0.0;
        for (int i = 0; i < tail; ++i)
            mean += out.telemetry[out.telemetry.size() - 1 - i].normalized_perf;
        std::cout << "mean normalized perf over last " << tail << " episodes: "
                  << fmt_g6(mean / tail) << "\n";
    }
    return kExitOk;
}

struct GridOverrides {
    std::vector<int> sources, targets, seeds;
    std::vector<std::string> ansatz;
    std::string generator;
    int eval_instances = -1;
    int episodes_scratch = -1;
    int episodes_finetune = -1;
    int workers = 0;
};

int cmd_grid(const std::string& config_path, const std::string& out_dir, bool dry_run,
             const GridOverrides& ov) {
    harness::ExperimentConfig cfg = load_config(config_path);
    if (!ov.sources.empty()) cfg.sources = ov.sources;
    if (!ov.targets.empty()) cfg.targets = ov.targets;
    if (!ov.seeds.empty()) {
        cfg.seeds.clear();
        for (int s : ov.seeds) cfg.seeds.push_back(static_cast<std::uint64_t>(s));
    }
    if (!ov.ansatz.empty()) {
        cfg.kinds.clear();
        for (const auto& k : ov.ansatz) cfg.kinds.push_back(ansatz::kind_from_string(k));
    }
    if (!ov.generator.empty()) cfg.generator = tsp::generator_from_string(ov.generator);
    if (ov.eval_instances >= 0) cfg.eval_instances = ov.eval_instances;
    if (ov.episodes_scratch >= 0) {
        cfg.episodes_scratch = ov.episodes_scratch;
        cfg.hp.episodes = ov.episodes_scratch;
    }
    if (ov.episodes_finetune >= 0) cfg.episodes_finetune = ov.episodes_finetune;
    if (ov.workers > 0) cfg.workers = ov.workers;
    cfg.validate();
    if (dry_run) {
        const auto jobs = harness::enumerate_cells(cfg);
        for (const auto& j : jobs) std::cout << j.run_id << "  " << j.descriptor << "\n";
        std::cout << jobs.size() << " cells\n";
        return kExitOk;
    }
    store::ResultsStore st(out_dir);
    st.set_meta("config", config_path.empty() ? "(defaults)" : config_path);
    const auto rep = harness::run_grid(cfg, st, [](const harness::CellJob& j, bool ok) {
        std::cout << (ok ? "done " : "FAIL ") << j.run_id << "  "
                  << harness::detail::mode_name(j.job, j.baseline) << " n=" << j.n
                  << " m=" << j.m << " seed=" << j.seed << "\n";
    });
    std::cout << "grid: executed=" << rep.executed << " skipped=" << rep.skipped
              << " failed=" << rep.failed << "\n"
              << "results: " << st.results_path().string() << "\n";
    return rep.failed == 0 ? kExitOk : kExitError;
}

int cmd_bound(const std::string& config_path, const std::string& results_dir,
              const std::string& mode, int n, int m, double theta_l1, double theta_max,
              double a_norm, double l_u, double c_prime, long m_episodes, double delta,
              std::optional<double> alpha) {
    if (!results_dir.empty()) {
        harness::ExperimentConfig cfg = load_config(config_path);
        if (!mode.empty()) cfg.bound.mode = mode;
        store::ResultsStore st(results_dir);
        const auto rows = harness::run_bound_overlay(cfg, st);
        int above = 0;
        for (const auto& r : rows) above += r.empirical_above_bound ? 1 : 0;
        std::cout << "wrote " << st.bounds_path().string() << " (" << rows.size()
                  << " cells, " << above << " above the bound)\n";
        return kExitOk;
    }
    bound::BoundInputs in;
    in.n = n;
    in.m = m;
    in.theta_l1 = theta_l1;
    in.theta_max = theta_max;
    in.a_norm = a_norm;
    in.l_u = l_u;
    in.c_prime = c_prime;
    in.m_episodes = m_episodes;
    in.delta = delta;
    if (mode == "fitted") {
        if (!alpha) throw std::runtime_error("fitted mode needs --alpha");
        in.alpha_n = *alpha;
    } else if (mode != "firstprinciples") {
        throw std::runtime_error("--mode must be firstprinciples or fitted");
    }
    std::cout << "t_tet      = " << bound::tetrahedral(n) << "\n"
              << "gen_error  = " << fmt_g6(bound::gen_error(n, m_episodes, delta)) << "\n"
              << "d_param    = " << fmt_g6(bound::d_param(in)) << "\n"
              << "d_struct   = " << fmt_g6(bound::d_struct(n, m, c_prime)) << "\n";
    const auto r = bound::transfer_lower_bound(1.0, in);
    std::cout << "d_total    = " << fmt_g6(r.d_total) << "\n"
              << "lower_bound(p_hat=1) = " << fmt_g6(r.lower_bound) << "\n";
    return kExitOk;
}

int cmd_report(const std::string& results_dir, const std::string& out_dir,
               const std::string& figures, const std::string& bound_mode) {
    report::ReportSpec spec;
    spec.results_dir = results_dir;
    spec.output_dir = out_dir;
    spec.bound_mode = bound_mode;
    if (!figures.empty() && figures != "all") {
        spec.transfer_panels = figures.find("transfer_panels") != std::string::npos;
        spec.bound_overlay = figures.find("bound_overlay") != std::string::npos;
        spec.learning_curves = figures.find("learning_curves") != std::string::npos;
    }
    const auto files = report::generate_report(spec);
    for (const auto& f : files) std::cout << "wrote " << f << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qtransfer: quantum-circuit RL transfer lab for small TSP instances"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a TSP instance as JSON");
    int gen_k = 8;
    std::string gen_generator = "random_uniform";
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    bool gen_solve = false;
    gen->add_option("--k", gen_k, "city count (3..20)");
    gen->add_option("--generator", gen_generator, "random_uniform | euclidean_unit_square");
    gen->add_option("--seed", gen_seed, "instance seed");
    gen->add_option("--out", gen_out, "output file (default stdout)");
    gen->add_flag("--solve", gen_solve, "also print classical solver tours as CSV rows");

    // train
    auto* train = app.add_subcommand("train", "train a single agent and save a checkpoint");
    std::string train_config, train_kind = "eqc", train_generator, train_out = "train_out";
    int train_k = 4, train_layers = 0, train_episodes = -1;
    std::uint64_t train_seed = 0;
    train->add_option("--config", train_config, "TOML config for hyperparameters");
    train->add_option("--k", train_k, "city count");
    train->add_option("--ansatz", train_kind, "eqc | effsu2");
    train->add_option("--layers", train_layers, "circuit layers (default from config)");
    train->add_option("--episodes", train_episodes, "training episodes (default from config)");
    train->add_option("--seed", train_seed, "run seed");
    train->add_option("--generator", train_generator, "instance generator");
    train->add_option("--out-dir", train_out, "output directory");

    // grid
    auto* grid = app.add_subcommand("grid", "run the experiment grid");
    std::string grid_config, grid_out = "runs";
    bool grid_dry = false;
    GridOverrides grid_ov;
    grid->add_option("--config", grid_config, "TOML experiment config");
    grid->add_option("--out", grid_out, "results store directory");
    grid->add_flag("--dry-run", grid_dry, "print the cell enumeration and exit");
    grid->add_option("--sources", grid_ov.sources, "override source sizes");
    grid->add_option("--targets", grid_ov.targets, "override target sizes");
    grid->add_option("--seeds", grid_ov.seeds, "override seed list");
    grid->add_option("--ansatz", grid_ov.ansatz, "override ansatz kinds (eqc effsu2)");
    grid->add_option("--generator", grid_ov.generator, "override instance generator");
    grid->add_option("--eval-instances", grid_ov.eval_instances,
                     "override evaluation instances per cell");
    grid->add_option("--episodes-scratch", grid_ov.episodes_scratch,
                     "override scratch-training episodes");
    grid->add_option("--episodes-finetune", grid_ov.episodes_finetune,
                     "override fine-tuning episodes");
    grid->add_option("--workers", grid_ov.workers,
                     "worker threads (overrides config and QTRANSFER_WORKERS)");

    // bound
    auto* bnd = app.add_subcommand("bound",
                                   "compute transfer-bound terms, or the full overlay "
                                   "table from grid results");
    std::string bound_config, bound_results, bound_mode = "firstprinciples";
    int bound_n = 4, bound_m = 8;
    double bound_theta_l1 = 0.0, bound_theta_max = 0.0, bound_a = 1.0, bound_lu = 2.0;
    double bound_cprime = 0.0, bound_delta = 0.05;
    long bound_M = 1000;
    double bound_alpha_val = 0.0;
    bool bound_alpha_set = false;
    bnd->add_option("--config", bound_config, "TOML config (overlay mode)");
    bnd->add_option("--results", bound_results, "results store directory (overlay mode)");
    bnd->add_option("--mode", bound_mode, "firstprinciples | fitted");
    bnd->add_option("--n", bound_n, "source size");
    bnd->add_option("--m", bound_m, "target size");
    bnd->add_option("--theta-l1", bound_theta_l1, "l1 norm of trained parameters");
    bnd->add_option("--theta-max", bound_theta_max, "max abs trained parameter");
    bnd->add_option("--a-norm", bound_a, "operator norm of the local generator term");
    bnd->add_option("--l-u", bound_lu, "unitary Lipschitz constant");
    bnd->add_option("--c-prime", bound_cprime, "structural constant");
    bnd->add_option("--m-episodes", bound_M, "training episodes M_n");
    bnd->add_option("--delta", bound_delta, "confidence parameter");
    bnd->add_option("--alpha", bound_alpha_val, "consolidated coefficient (fitted mode)")
        ->each([&](const std::string&) { bound_alpha_set = true; });

    // report
    auto* rep = app.add_subcommand("report", "render figures and the summary table");
    std::string rep_results, rep_out = "report", rep_figures = "all", rep_mode = "fitted";
    rep->add_option("--results", rep_results, "results store directory")->required();
    rep->add_option("--out", rep_out, "output directory");
    rep->add_option("--figures", rep_figures,
                    "comma list of transfer_panels,bound_overlay,learning_curves or 'all'");
    rep->add_option("--bound-mode", rep_mode, "annotation for the bound figure");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(gen_k, gen_generator, gen_seed, gen_out, gen_solve);
        if (train->parsed())
            return cmd_train(train_config, train_k, train_kind, train_layers, train_episodes,
                             train_seed, train_generator, train_out);
        if (grid->parsed()) return cmd_grid(grid_config, grid_out, grid_dry, grid_ov);
        if (bnd->parsed())
            return cmd_bound(bound_config, bound_results, bound_mode, bound_n, bound_m,
                             bound_theta_l1, bound_theta_max, bound_a, bound_lu, bound_cprime,
                             bound_M, bound_delta,
                             bound_alpha_set ? std::optional<double>(bound_alpha_val)
                                             : std::nullopt);
        if (rep->parsed()) return cmd_report(rep_results, rep_out, rep_figures, rep_mode);
    } catch (const report::InvariantViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
