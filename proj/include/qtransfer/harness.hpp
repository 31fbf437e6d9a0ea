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

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qtransfer/agent.hpp"
#include "qtransfer/ansatz.hpp"
#include "qtransfer/bound.hpp"
#include "qtransfer/common.hpp"
#include "qtransfer/store.hpp"
#include "qtransfer/toml.hpp"
#include "qtransfer/tsp.hpp"

namespace qtransfer::harness {

struct BoundConfig {
    double delta = 0.05;
    std::string mode = "fitted";  // fitted | firstprinciples
    int phat_instances = 200;
    int struct_instances = 100;
};

struct ExperimentConfig {
    std::vector<ansatz::AnsatzKind> kinds{ansatz::AnsatzKind::EQC, ansatz::AnsatzKind::EffSU2};
    std::vector<int> sources{4, 6, 8, 10};
    std::vector<int> targets{6, 8, 10, 12, 15};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    int episodes_scratch = 1000;
    int episodes_finetune = 100;
    int eval_instances = 50;
    tsp::Generator generator = tsp::Generator::RandomUniform;
    agent::Hyperparams hp;
    int layers = 1;
    agent::InstanceMode instance_mode = agent::InstanceMode::Fresh;
    double finetune_eps_start = 0.3;
    bool run_zero_shot = true;
    bool run_finetune = true;
    bool run_scratch_at_target = true;
    bool run_baselines = true;
    int workers = 0;  // 0 = QTRANSFER_WORKERS env var, else hardware concurrency
    BoundConfig bound;

    void validate() const {
        if (sources.empty() || seeds.empty()) throw std::invalid_argument("config: empty grid");
        int min_source = sources.front();
        for (int n : sources) {
            min_source = std::min(min_source, n);
            if (n < tsp::kMinCities || n > tsp::kMaxHeldKarp)
                throw std::invalid_argument("config: source size out of range");
        }
        for (int m : targets) {
            if (m < tsp::kMinCities || m > tsp::kMaxHeldKarp)
                throw std::invalid_argument("config: target size out of range");
            if (m < min_source)
                throw std::invalid_argument("config: target below the smallest source");
        }
        if (eval_instances < 0 || episodes_scratch < 0 || episodes_finetune < 0 || layers < 1)
            throw std::invalid_argument("config: counts must be non-negative, layers >= 1");
        if (bound.mode != "fitted" && bound.mode != "firstprinciples")
            throw std::invalid_argument("config: bound mode is fitted|firstprinciples");
        hp.validate();
    }
};

inline ExperimentConfig config_from_toml(const toml::Document& doc) {
    ExperimentConfig c;
    const auto kinds = doc.get_string_array("experiment", "ansatz", {"eqc", "effsu2"});
    c.kinds.clear();
    for (const auto& k : kinds) c.kinds.push_back(ansatz::kind_from_string(k));
    c.sources = doc.get_int_array("experiment", "sources", c.sources);
    c.targets = doc.get_int_array("experiment", "targets", c.targets);
    const auto seeds = doc.get_int_array("experiment", "seeds", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    c.seeds.clear();
    for (int s : seeds) c.seeds.push_back(static_cast<std::uint64_t>(s));
    c.episodes_scratch = static_cast<int>(doc.get_int("experiment", "episodes_scratch", 1000));
    c.episodes_finetune = static_cast<int>(doc.get_int("experiment", "episodes_finetune", 100));
    c.eval_instances = static_cast<int>(doc.get_int("experiment", "eval_instances", 50));
    c.generator = tsp::generator_from_string(
        doc.get_string("experiment", "generator", "random_uniform"));
    c.layers = static_cast<int>(doc.get_int("experiment", "layers", 1));
    c.instance_mode = agent::instance_mode_from_string(
        doc.get_string("experiment", "instance_mode", "fresh"));
    c.finetune_eps_start = doc.get_double("experiment", "finetune_eps_start", 0.3);
    c.run_zero_shot = doc.get_bool("experiment", "run_zero_shot", true);
    c.run_finetune = doc.get_bool("experiment", "run_finetune", true);
    c.run_scratch_at_target = doc.get_bool("experiment", "run_scratch_at_target", true);
    c.run_baselines = doc.get_bool("experiment", "run_baselines", true);
    c.workers = static_cast<int>(doc.get_int("experiment", "workers", 0));

    c.hp.learning_rate = doc.get_double("hyperparams", "learning_rate", 0.01);
    c.hp.eps_start = doc.get_double("hyperparams", "eps_start", 1.0);
    c.hp.eps_end = doc.get_double("hyperparams", "eps_end", 0.01);
    c.hp.eps_decay = doc.get_double("hyperparams", "eps_decay", 1000.0);
    c.hp.discount = doc.get_double("hyperparams", "discount", 0.9);
    c.hp.fd_step = doc.get_double("hyperparams", "fd_step", 0.01);
    c.hp.episodes = c.episodes_scratch;

    c.bound.delta = doc.get_double("bound", "delta", 0.05);
    c.bound.mode = doc.get_string("bound", "mode", "fitted");
    c.bound.phat_instances = static_cast<int>(doc.get_int("bound", "phat_instances", 200));
    c.bound.struct_instances = static_cast<int>(doc.get_int("bound", "struct_instances", 100));
    c.validate();
    return c;
}

enum class JobKind : std::uint8_t { Scratch, ZeroShot, Finetune, Baseline };

struct CellJob {
    JobKind job;
    ansatz::AnsatzKind kind = ansatz::AnsatzKind::EQC;  // unused for baselines
    std::string baseline;                               // christofides | nn | optimal
    int n = 0;  // source size (scratch: trained size; baseline: = m)
    int m = 0;  // target size
    std::uint64_t seed = 0;
    int phase = 0;  // 0: no dependencies, 1: needs a source checkpoint
    std::string descriptor;
    std::string run_id;
};

namespace detail {

inline std::string hp_signature(const agent::Hyperparams& hp) {
    std::ostringstream os;
    os << "lr=" << fmt_g17(hp.learning_rate) << ";es=" << fmt_g17(hp.eps_start)
       << ";ee=" << fmt_g17(hp.eps_end) << ";ed=" << fmt_g17(hp.eps_decay)
       << ";g=" << fmt_g17(hp.discount) << ";fd=" << fmt_g17(hp.fd_step);
    return os.str();
}

inline std::string mode_name(JobKind j, const std::string& baseline) {
    switch (j) {
        case JobKind::Scratch: return "scratch";
        case JobKind::ZeroShot: return "zero_shot";
        case JobKind::Finetune: return "finetune";
        case JobKind::Baseline: return "baseline_" + baseline;
    }
    return "?";
}

inline std::string make_descriptor(const ExperimentConfig& cfg, const CellJob& job) {
    std::ostringstream os;
    os << "qtransfer-v1|mode=" << mode_name(job.job, job.baseline);
    if (job.job == JobKind::Baseline) {
        os << "|policy=" << job.baseline << "|m=" << job.m << "|seed=" << job.seed
           << "|gen=" << tsp::to_string(cfg.generator) << "|eval=" << cfg.eval_instances;
        return os.str();
    }
    os << "|policy=" << ansatz::to_string(job.kind) << "|n=" << job.n << "|m=" << job.m
       << "|seed=" << job.seed << "|gen=" << tsp::to_string(cfg.generator)
       << "|layers=" << cfg.layers << "|instmode=" << agent::to_string(cfg.instance_mode)
       << "|scratch=" << cfg.episodes_scratch << "|eval=" << cfg.eval_instances
       << "|hp=" << hp_signature(cfg.hp);
    if (job.job == JobKind::Finetune)
        os << "|finetune=" << cfg.episodes_finetune
           << "|feps=" << fmt_g17(cfg.finetune_eps_start);
    return os.str();
}

inline void seal(const ExperimentConfig& cfg, CellJob& job) {
    job.descriptor = make_descriptor(cfg, job);
    job.run_id = hex64(fnv1a64(job.descriptor));
}

struct Stats {
    double mean = 0.0;
    double stddev = 0.0;
};

inline Stats stats_of(const std::vector<double>& xs) {
    Stats s;
    if (xs.empty()) return s;
    double acc = 0.0;
    for (double x : xs) acc += x;
    s.mean = acc / xs.size();
    if (xs.size() > 1) {
        double var = 0.0;
        for (double x : xs) var += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(var / (xs.size() - 1));
    }
    return s;
}

}  // namespace detail

/// Deterministic cell enumeration; phase-0 jobs have no dependencies, phase-1
/// jobs read phase-0 checkpoints.
inline std::vector<CellJob> enumerate_cells(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<CellJob> jobs;
    std::set<std::string> seen;
    auto push = [&](CellJob j) {
        detail::seal(cfg, j);
        if (seen.insert(j.run_id).second) jobs.push_back(std::move(j));
    };

    for (const auto kind : cfg.kinds)
        for (const int n : cfg.sources)
            for (const auto seed : cfg.seeds)
                push({JobKind::Scratch, kind, "", n, n, seed, 0, "", ""});

    if (cfg.run_scratch_at_target)
        for (const auto kind : cfg.kinds)
            for (const int m : cfg.targets)
                for (const auto seed : cfg.seeds)
                    push({JobKind::Scratch, kind, "", m, m, seed, 0, "", ""});

    for (const auto kind : cfg.kinds)
        for (const int n : cfg.sources)
            for (const int m : cfg.targets) {
                if (m < n) continue;
                for (const auto seed : cfg.seeds) {
                    if (cfg.run_zero_shot)
                        push({JobKind::ZeroShot, kind, "", n, m, seed, 1, "", ""});
                    if (cfg.run_finetune && m > n)
                        push({JobKind::Finetune, kind, "", n, m, seed, 1, "", ""});
                }
            }

    if (cfg.run_baselines)
        for (const std::string& b : {"christofides", "nn", "optimal"})
            for (const int m : cfg.targets)
                for (const auto seed : cfg.seeds)
                    push({JobKind::Baseline, ansatz::AnsatzKind::EQC, b, m, m, seed, 0, "", ""});

    return jobs;
}

namespace detail {

inline std::uint64_t eval_set_seed(int m, std::uint64_t seed) {
    return derive_seed(seed, "eval-set", static_cast<std::uint64_t>(m));
}

inline store::RunResult aggregate(const CellJob& job, const std::vector<agent::EvalRow>& rows,
                                  double wallclock) {
    std::vector<double> lens, perfs;
    lens.reserve(rows.size());
    for (const auto& r : rows) {
        lens.push_back(r.tour_length);
        perfs.push_back(r.normalized_perf);
    }
    const Stats ls = stats_of(lens);
    const Stats ps = stats_of(perfs);
    store::RunResult out;
    out.run_id = job.run_id;
    out.mode = mode_name(job.job, job.baseline);
    out.policy = job.job == JobKind::Baseline ? job.baseline : ansatz::to_string(job.kind);
    out.n_source = job.n;
    out.m_target = job.m;
    out.seed = job.seed;
    out.mean_tour_length = ls.mean;
    out.std_tour_length = ls.stddev;
    out.mean_normalized_perf = ps.mean;
    out.wallclock_seconds = wallclock;
    return out;
}

inline std::vector<agent::EvalRow> evaluate_params(const ExperimentConfig& cfg,
                                                   const ansatz::AnsatzParams& params, int m,
                                                   std::uint64_t seed) {
    return agent::evaluate(params, m, cfg.eval_instances, eval_set_seed(m, seed),
                           cfg.generator);
}

inline void write_telemetry(const std::filesystem::path& path,
                            const std::vector<agent::EpisodeRecord>& telemetry) {
    std::ofstream out(path, std::ios::trunc);
    out << "episode,tour_length,normalized_perf,epsilon,td_loss_sum\n";
    for (const auto& r : telemetry)
        out << r.episode << ',' << fmt_g6(r.tour_length) << ',' << fmt_g6(r.normalized_perf)
            << ',' << fmt_g6(r.epsilon) << ',' << fmt_g6(r.td_loss_sum) << "\n";
}

inline CellJob source_job_for(const ExperimentConfig& cfg, const CellJob& transfer) {
    CellJob src{JobKind::Scratch, transfer.kind, "", transfer.n, transfer.n, transfer.seed,
                0,   "",          ""};
    seal(cfg, src);
    return src;
}

inline ansatz::Checkpoint train_scratch(const ExperimentConfig& cfg, const CellJob& job,
                                        store::ResultsStore& st) {
    agent::TrainConfig tc;
    tc.k = job.n;
    tc.kind = job.kind;
    tc.layers = cfg.layers;
    tc.generator = cfg.generator;
    tc.hp = cfg.hp;
    tc.hp.episodes = cfg.episodes_scratch;
    tc.instance_mode = cfg.instance_mode;
    tc.seed = fnv1a64(job.descriptor);
    const agent::TrainOutput out = agent::train(tc);
    ansatz::Checkpoint ck;
    ck.params = out.params;
    nlohmann::json hj;
    agent::to_json(hj, tc.hp);
    ck.hyperparams = hj;
    ck.seed = tc.seed;
    ck.created_at = "";  // filled by callers that want wall time; not part of identity
    ansatz::save_checkpoint(ck, st.checkpoint_path(job.run_id).string());
    write_telemetry(st.telemetry_path(job.run_id), out.telemetry);
    return ck;
}

inline ansatz::Checkpoint load_source_checkpoint(const ExperimentConfig& cfg, const CellJob& job,
                                                 store::ResultsStore& st) {
    const CellJob src = source_job_for(cfg, job);
    const auto path = st.checkpoint_path(src.run_id);
    if (!std::filesystem::exists(path)) {
        // Source training was skipped or lost; rebuild it deterministically.
        return train_scratch(cfg, src, st);
    }
    return ansatz::load_checkpoint(path.string());
}

inline std::vector<agent::EvalRow> run_baseline(const ExperimentConfig& cfg, const CellJob& job) {
    std::vector<agent::EvalRow> rows;
    rows.reserve(cfg.eval_instances);
    for (int i = 0; i < cfg.eval_instances; ++i) {
        const agent::EvalCase c =
            agent::eval_case(job.m, cfg.generator, eval_set_seed(job.m, job.seed), i);
        const tsp::PerfNormalizer norm = tsp::make_normalizer(c.instance);
        double len = 0.0;
        if (job.baseline == "christofides") {
            len = tsp::christofides_like(c.instance).tour.length;
        } else if (job.baseline == "nn") {
            len = tsp::nearest_neighbor(c.instance, c.start).length;
        } else if (job.baseline == "optimal") {
            len = norm.l_opt;
        } else {
            throw std::invalid_argument("unknown baseline: " + job.baseline);
        }
        rows.push_back({len, tsp::normalize_performance(len, norm)});
    }
    return rows;
}

inline store::RunResult execute_job(const ExperimentConfig& cfg, const CellJob& job,
                                    store::ResultsStore& st) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<agent::EvalRow> rows;
    switch (job.job) {
        case JobKind::Scratch: {
            const ansatz::Checkpoint ck = train_scratch(cfg, job, st);
            rows = evaluate_params(cfg, ck.params, job.m, job.seed);
            break;
        }
        case JobKind::ZeroShot: {
            const ansatz::Checkpoint ck = load_source_checkpoint(cfg, job, st);
            rows = evaluate_params(cfg, ansatz::adapt_params(ck.params, job.m), job.m, job.seed);
            break;
        }
        case JobKind::Finetune: {
            const ansatz::Checkpoint ck = load_source_checkpoint(cfg, job, st);
            const ansatz::AnsatzParams warm = ansatz::adapt_params(ck.params, job.m);
            agent::TrainConfig tc;
            tc.k = job.m;
            tc.kind = job.kind;
            tc.layers = cfg.layers;
            tc.generator = cfg.generator;
            tc.hp = cfg.hp;
            tc.hp.episodes = cfg.episodes_finetune;
            tc.hp.eps_start = cfg.finetune_eps_start;
            tc.instance_mode = cfg.instance_mode;
            tc.seed = fnv1a64(job.descriptor);
            tc.initial = &warm;
            const agent::TrainOutput out = agent::train(tc);
            ansatz::Checkpoint fck;
            fck.params = out.params;
            nlohmann::json hj;
            agent::to_json(hj, tc.hp);
            fck.hyperparams = hj;
            fck.seed = tc.seed;
            ansatz::save_checkpoint(fck, st.checkpoint_path(job.run_id).string());
            write_telemetry(st.telemetry_path(job.run_id), out.telemetry);
            rows = evaluate_params(cfg, out.params, job.m, job.seed);
            break;
        }
        case JobKind::Baseline:
            rows = run_baseline(cfg, job);
            break;
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return aggregate(job, rows, wall);
}

inline int resolve_workers(const ExperimentConfig& cfg) {
    if (cfg.workers > 0) return cfg.workers;
    if (const char* env = std::getenv("QTRANSFER_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) return w;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

inline void run_pool(const std::vector<CellJob>& jobs, int workers,
                     const std::function<void(const CellJob&)>& fn) {
    if (jobs.empty()) return;
    workers = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
    if (workers == 1) {
        for (const CellJob& j : jobs) fn(j);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= jobs.size()) return;
                fn(jobs[i]);
            }
        });
    for (auto& t : pool) t.join();
}

}  // namespace detail

struct GridReport {
    int executed = 0;
    int skipped = 0;
    int failed = 0;
};

/// Runs the experiment grid: scratch training at the sources (and optionally
/// targets), zero-shot and fine-tuned transfer, and classical baselines, all
/// paired on identical evaluation instance sets. Resumable by run_id; cell
/// failures are recorded and the grid continues.
inline GridReport run_grid(const ExperimentConfig& cfg, store::ResultsStore& st,
                           const std::function<void(const CellJob&, bool)>& progress = {}) {
    const std::vector<CellJob> all = enumerate_cells(cfg);
    GridReport rep;
    std::vector<CellJob> phase0, phase1;
    for (const CellJob& j : all) {
        if (st.completed(j.run_id)) {
            ++rep.skipped;
            continue;
        }
        (j.phase == 0 ? phase0 : phase1).push_back(j);
    }
    std::atomic<int> executed{0}, failed{0};
    const auto run_one = [&](const CellJob& job) {
        try {
            const store::RunResult row = detail::execute_job(cfg, job, st);
            st.append({row}, job.run_id, job.descriptor);
            executed.fetch_add(1);
            if (progress) progress(job, true);
        } catch (const std::exception& e) {
            st.record_error(job.run_id, e.what());
            failed.fetch_add(1);
            if (progress) progress(job, false);
        }
    };
    const int workers = detail::resolve_workers(cfg);
    detail::run_pool(phase0, workers, run_one);
    detail::run_pool(phase1, workers, run_one);
    st.finalize();
    rep.executed = executed.load();
    rep.failed = failed.load();
    return rep;
}

// ---------------------------------------------------------------------------
// Bound overlay
// ---------------------------------------------------------------------------

struct BoundRow {
    int n = 0;
    int m = 0;
    double p_hat_n = 0.0;
    double gen_error = 0.0;
    double d_param = 0.0;
    double d_struct = 0.0;
    double lower_bound = 0.0;
    std::string mode;
    double empirical_zero_shot = 0.0;
    bool empirical_above_bound = false;
    double alpha_n = 0.0;
    double c_prime = 0.0;
};

inline constexpr const char* kBoundsHeader =
    "n,m,p_hat_n,gen_error,d_param,d_struct,lower_bound,mode,empirical_zero_shot,"
    "empirical_above_bound,alpha_n,c_prime";

namespace detail {

struct SizeSample {
    double mean_l_opt = 0.0;
    double mean_l_max = 0.0;
};

inline SizeSample measure_size(const ExperimentConfig& cfg, int size) {
    SizeSample s;
    const std::uint64_t base = derive_seed(fnv1a64("struct-sample"), tsp::to_string(cfg.generator),
                                           static_cast<std::uint64_t>(size));
    for (int i = 0; i < cfg.bound.struct_instances; ++i) {
        const auto inst = tsp::gen_instance(size, cfg.generator, derive_seed(base, "i", i));
        const auto norm = tsp::make_normalizer(inst);
        s.mean_l_opt += norm.l_opt;
        s.mean_l_max += norm.l_max;
    }
    s.mean_l_opt /= cfg.bound.struct_instances;
    s.mean_l_max /= cfg.bound.struct_instances;
    return s;
}

/// C' for the configured generator: BHH-based for Euclidean instances, a
/// measured mean-optimal-length slope for the non-metric uniform generator.
inline double struct_constant(const ExperimentConfig& cfg, int n,
                              const std::map<int, SizeSample>& samples) {
    const SizeSample& at_n = samples.at(n);
    const double gap = std::max(1e-9, at_n.mean_l_max - at_n.mean_l_opt);
    if (cfg.generator == tsp::Generator::EuclideanUnitSquare)
        return bound::kBhhBeta2 / (2.0 * gap);
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [size, sample] : samples) {
        if (size <= n) continue;
        const double x = static_cast<double>(size - n) / std::sqrt(static_cast<double>(n));
        sxy += x * (sample.mean_l_opt - at_n.mean_l_opt);
        sxx += x * x;
    }
    if (sxx == 0.0) return 0.0;
    return std::max(0.0, sxy / sxx) / gap;
}

}  // namespace detail

/// Computes the transfer-bound table from the grid's EQC rows and writes
/// bounds.csv: P-hat per source size, fitted alpha_n (or first-principles
/// constants), and the lower bound per (n, m) with the empirical comparison.
inline std::vector<BoundRow> run_bound_overlay(const ExperimentConfig& cfg,
                                               store::ResultsStore& st) {
    cfg.validate();
    const auto rows = st.rows();

    // Zero-shot EQC means per (n, m, seed).
    std::map<std::pair<int, int>, std::map<std::uint64_t, double>> zero;
    for (const auto& r : rows)
        if (r.mode == "zero_shot" && r.policy == "eqc")
            zero[{r.n_source, r.m_target}][r.seed] = r.mean_normalized_perf;
    if (zero.empty())
        throw std::runtime_error("bound overlay: no EQC zero_shot rows in the results store");

    // P-hat per source size: greedy performance of each seed's checkpoint on
    // fresh instances at the source size.
    std::map<int, double> p_hat;  // mean across seeds
    std::map<int, double> theta_l1, theta_max;
    for (const int n : cfg.sources) {
        double acc = 0.0, acc_l1 = 0.0, acc_max = 0.0;
        int count = 0;
        for (const auto seed : cfg.seeds) {
            CellJob src{JobKind::Scratch, ansatz::AnsatzKind::EQC, "", n, n, seed, 0, "", ""};
            detail::seal(cfg, src);
            const auto path = st.checkpoint_path(src.run_id);
            if (!std::filesystem::exists(path))
                throw std::runtime_error("bound overlay: missing checkpoint for n=" +
                                         std::to_string(n));
            const auto ck = ansatz::load_checkpoint(path.string());
            const auto evals =
                agent::evaluate(ck.params, n, cfg.bound.phat_instances,
                                derive_seed(seed, "phat", static_cast<std::uint64_t>(n)),
                                cfg.generator);
            double mean = 0.0;
            for (const auto& e : evals) mean += e.normalized_perf;
            mean /= std::max<std::size_t>(1, evals.size());
            acc += mean;
            double l1 = 0.0, mx = 0.0;
            for (double v : ck.params.values) {
                l1 += std::fabs(v);
                mx = std::max(mx, std::fabs(v));
            }
            acc_l1 += l1;
            acc_max = std::max(acc_max, mx);
            ++count;
        }
        p_hat[n] = acc / count;
        theta_l1[n] = acc_l1 / count;
        theta_max[n] = acc_max;
    }

    // Structural samples at every size in play.
    std::map<int, detail::SizeSample> samples;
    for (const int n : cfg.sources) samples.emplace(n, detail::measure_size(cfg, n));
    for (const int m : cfg.targets)
        if (!samples.count(m)) samples.emplace(m, detail::measure_size(cfg, m));

    const double a_norm = cfg.generator == tsp::Generator::RandomUniform ? 2.0 : std::sqrt(2.0);
    std::vector<BoundRow> out;
    for (const int n : cfg.sources) {
        const double c_prime = detail::struct_constant(cfg, n, samples);

        double alpha = 0.0;
        if (cfg.bound.mode == "fitted") {
            std::vector<bound::AlphaRecord> recs;
            for (const auto& [cell, by_seed] : zero) {
                if (cell.first != n || by_seed.empty()) continue;
                double zmean = 0.0;
                for (const auto& [seed, v] : by_seed) zmean += v;
                zmean /= by_seed.size();
                const double gap = std::max(
                    0.0, p_hat[n] - zmean - bound::d_struct(n, cell.second, c_prime));
                recs.push_back({n, cell.second, gap});
            }
            bool has_transfer = false;
            for (const auto& r : recs) has_transfer |= r.m > r.n;
            alpha = has_transfer ? bound::fit_alpha(recs) : 0.0;
        }

        for (const auto& [cell, by_seed] : zero) {
            if (cell.first != n) continue;
            const int m = cell.second;
            bound::BoundInputs in;
            in.n = n;
            in.m = m;
            in.theta_l1 = theta_l1[n];
            in.theta_max = theta_max[n];
            in.a_norm = a_norm;
            in.l_u = 2.0;
            in.c_prime = c_prime;
            in.m_episodes = cfg.episodes_scratch;
            in.delta = cfg.bound.delta;
            if (cfg.bound.mode == "fitted") in.alpha_n = alpha;
            const bound::BoundResult br = bound::transfer_lower_bound(p_hat[n], in);
            double zmean = 0.0;
            for (const auto& [seed, v] : by_seed) zmean += v;
            zmean /= by_seed.size();
            BoundRow row;
            row.n = n;
            row.m = m;
            row.p_hat_n = p_hat[n];
            row.gen_error = br.gen_error;
            row.d_param = br.d_param;
            row.d_struct = br.d_struct;
            row.lower_bound = br.lower_bound;
            row.mode = cfg.bound.mode;
            row.empirical_zero_shot = zmean;
            row.empirical_above_bound = zmean >= br.lower_bound;
            row.alpha_n = alpha;
            row.c_prime = c_prime;
            out.push_back(row);
        }
    }

    std::ofstream csv(st.bounds_path(), std::ios::trunc);
    csv << kBoundsHeader << "\n";
    for (const auto& r : out)
        csv << r.n << ',' << r.m << ',' << fmt_g6(r.p_hat_n) << ',' << fmt_g6(r.gen_error) << ','
            << fmt_g6(r.d_param) << ',' << fmt_g6(r.d_struct) << ',' << fmt_g6(r.lower_bound)
            << ',' << r.mode << ',' << fmt_g6(r.empirical_zero_shot) << ','
            << (r.empirical_above_bound ? 1 : 0) << ',' << fmt_g6(r.alpha_n) << ','
            << fmt_g6(r.c_prime) << "\n";
    return out;
}

}  // namespace qtransfer::harness
