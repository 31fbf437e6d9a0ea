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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtransfer/common.hpp"

namespace qtransfer::store {

/// One aggregated experiment cell (means over the cell's evaluation set).
struct RunResult {
    std::string run_id;
    std::string mode;    // scratch | zero_shot | finetune | baseline_*
    std::string policy;  // eqc | effsu2 | christofides | nn | optimal
    int n_source = 0;
    int m_target = 0;
    std::uint64_t seed = 0;
    double mean_tour_length = 0.0;
    double std_tour_length = 0.0;
    double mean_normalized_perf = 0.0;
    double wallclock_seconds = 0.0;
};

inline constexpr const char* kResultsHeader =
    "run_id,mode,policy,n_source,m_target,seed,mean_tour_length,std_tour_length,"
    "mean_normalized_perf,wallclock_seconds";

inline std::string to_csv_row(const RunResult& r) {
    std::ostringstream os;
    os << r.run_id << ',' << r.mode << ',' << r.policy << ',' << r.n_source << ','
       << r.m_target << ',' << r.seed << ',' << fmt_g6(r.mean_tour_length) << ','
       << fmt_g6(r.std_tour_length) << ',' << fmt_g6(r.mean_normalized_perf) << ','
       << fmt_g6(r.wallclock_seconds);
    return os.str();
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline bool runresult_from_csv(const std::string& line, RunResult& r) {
    const auto f = split_csv(line);
    if (f.size() != 10) return false;
    try {
        r.run_id = f[0];
        r.mode = f[1];
        r.policy = f[2];
        r.n_source = std::stoi(f[3]);
        r.m_target = std::stoi(f[4]);
        r.seed = std::stoull(f[5]);
        r.mean_tour_length = std::stod(f[6]);
        r.std_tour_length = std::stod(f[7]);
        r.mean_normalized_perf = std::stod(f[8]);
        r.wallclock_seconds = std::stod(f[9]);
    } catch (const std::exception&) {
        return false;
    }
    return true;
}

/// Append-only results store with a JSON manifest keyed by content-hashed
/// run ids. Appends go through one serialized writer; finalize() rewrites the
/// CSV sorted by run_id so completed grids are byte-stable.
class ResultsStore {
  public:
    explicit ResultsStore(const std::filesystem::path& dir) : dir_(dir) {
        std::filesystem::create_directories(dir_);
        std::filesystem::create_directories(checkpoints_dir());
        std::filesystem::create_directories(telemetry_dir());
        load();
    }

    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path results_path() const { return dir_ / "results.csv"; }
    std::filesystem::path manifest_path() const { return dir_ / "manifest.json"; }
    std::filesystem::path bounds_path() const { return dir_ / "bounds.csv"; }
    std::filesystem::path checkpoints_dir() const { return dir_ / "checkpoints"; }
    std::filesystem::path telemetry_dir() const { return dir_ / "telemetry"; }

    std::filesystem::path checkpoint_path(const std::string& run_id) const {
        return checkpoints_dir() / (run_id + ".json");
    }
    std::filesystem::path telemetry_path(const std::string& run_id) const {
        return telemetry_dir() / (run_id + ".csv");
    }

    bool completed(const std::string& run_id) const {
        std::lock_guard<std::mutex> lk(mu_);
        return manifest_["completed"].contains(run_id);
    }

    void append(const std::vector<RunResult>& rows, const std::string& run_id,
                const std::string& descriptor = "") {
        std::lock_guard<std::mutex> lk(mu_);
        std::ofstream out(results_path(), std::ios::app);
        if (!out) throw std::runtime_error("cannot append to " + results_path().string());
        if (!header_written_) {
            out << kResultsHeader << "\n";
            header_written_ = true;
        }
        for (const RunResult& r : rows) {
            out << to_csv_row(r) << "\n";
            rows_.push_back(r);
        }
        out.flush();
        manifest_["completed"][run_id] = descriptor;
        write_manifest_locked();
    }

    void record_error(const std::string& run_id, const std::string& message) {
        std::lock_guard<std::mutex> lk(mu_);
        manifest_["errors"][run_id] = message;
        write_manifest_locked();
    }

    std::vector<RunResult> rows() const {
        std::lock_guard<std::mutex> lk(mu_);
        return rows_;
    }

    /// Deduplicates by run_id (first wins) and rewrites results.csv sorted by
    /// run_id. Idempotent.
    void finalize() {
        std::lock_guard<std::mutex> lk(mu_);
        std::vector<RunResult> unique;
        std::vector<std::string> seen;
        std::stable_sort(rows_.begin(), rows_.end(),
                         [](const RunResult& a, const RunResult& b) {
                             if (a.run_id != b.run_id) return a.run_id < b.run_id;
                             return a.mode < b.mode;
                         });
        for (const RunResult& r : rows_) {
            bool dup = false;
            for (auto it = seen.rbegin(); it != seen.rend(); ++it) {
                if (*it == r.run_id) {
                    dup = true;
                    break;
                }
                if (*it < r.run_id) break;
            }
            if (!dup) {
                unique.push_back(r);
                seen.push_back(r.run_id);
            }
        }
        rows_ = std::move(unique);
        std::ofstream out(results_path(), std::ios::trunc);
        out << kResultsHeader << "\n";
        for (const RunResult& r : rows_) out << to_csv_row(r) << "\n";
        header_written_ = true;
    }

    nlohmann::json manifest() const {
        std::lock_guard<std::mutex> lk(mu_);
        return manifest_;
    }

    void set_meta(const std::string& key, const nlohmann::json& value) {
        std::lock_guard<std::mutex> lk(mu_);
        manifest_["meta"][key] = value;
        write_manifest_locked();
    }

  private:
    void load() {
        manifest_ = nlohmann::json{{"completed", nlohmann::json::object()},
                                   {"errors", nlohmann::json::object()},
                                   {"meta", {{"rng", kRngAlgorithm}}}};
        if (std::filesystem::exists(manifest_path())) {
            std::ifstream in(manifest_path());
            nlohmann::json j;
            try {
                in >> j;
                if (j.contains("completed")) manifest_ = j;
            } catch (const std::exception&) {
                // Torn manifest: fall back to empty; completed cells will be
                // recomputed, which is safe because rows dedupe on finalize.
            }
        }
        rows_.clear();
        header_written_ = false;
        if (std::filesystem::exists(results_path())) {
            std::ifstream in(results_path());
            std::string line;
            bool first = true;
            while (std::getline(in, line)) {
                if (first) {
                    first = false;
                    header_written_ = true;
                    continue;
                }
                RunResult r;
                if (runresult_from_csv(line, r)) rows_.push_back(r);
            }
        }
    }

    void write_manifest_locked() {
        const auto tmp = manifest_path().string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::trunc);
            out << manifest_.dump(2) << "\n";
        }
        std::filesystem::rename(tmp, manifest_path());
    }

    std::filesystem::path dir_;
    mutable std::mutex mu_;
    nlohmann::json manifest_;
    std::vector<RunResult> rows_;
    bool header_written_ = false;
};

}  // namespace qtransfer::store
