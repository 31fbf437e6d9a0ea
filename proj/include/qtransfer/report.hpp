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
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qtransfer/common.hpp"
#include "qtransfer/store.hpp"

namespace qtransfer::report {

struct InvariantViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ReportSpec {
    std::string results_dir;
    std::string output_dir;
    bool transfer_panels = true;
    bool bound_overlay = true;
    bool learning_curves = true;
    std::string bound_mode = "fitted";  // annotation only; bounds.csv carries the mode
};

namespace detail {

// ---------------------------------------------------------------- svg basics

class Svg {
  public:
    Svg(double w, double h) : w_(w), h_(h) {
        os_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt_g6(w)
            << "\" height=\"" << fmt_g6(h) << "\" viewBox=\"0 0 " << fmt_g6(w) << " "
            << fmt_g6(h) << "\">\n";
        os_ << "<rect x=\"0\" y=\"0\" width=\"" << fmt_g6(w) << "\" height=\"" << fmt_g6(h)
            << "\" fill=\"white\"/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& color,
              double width = 1.0, bool dashed = false) {
        os_ << "<line x1=\"" << fmt_g6(x1) << "\" y1=\"" << fmt_g6(y1) << "\" x2=\""
            << fmt_g6(x2) << "\" y2=\"" << fmt_g6(y2) << "\" stroke=\"" << color
            << "\" stroke-width=\"" << fmt_g6(width) << "\"";
        if (dashed) os_ << " stroke-dasharray=\"6,4\"";
        os_ << "/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                  double width = 1.5, bool dashed = false) {
        if (pts.size() < 2) return;
        os_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
            << fmt_g6(width) << "\"";
        if (dashed) os_ << " stroke-dasharray=\"6,4\"";
        os_ << " points=\"";
        for (const auto& [x, y] : pts) os_ << fmt_g6(x) << "," << fmt_g6(y) << " ";
        os_ << "\"/>\n";
    }

    void circle(double x, double y, double r, const std::string& color) {
        os_ << "<circle cx=\"" << fmt_g6(x) << "\" cy=\"" << fmt_g6(y) << "\" r=\"" << fmt_g6(r)
            << "\" fill=\"" << color << "\"/>\n";
    }

    void square(double x, double y, double half, const std::string& color) {
        os_ << "<rect x=\"" << fmt_g6(x - half) << "\" y=\"" << fmt_g6(y - half)
            << "\" width=\"" << fmt_g6(2 * half) << "\" height=\"" << fmt_g6(2 * half)
            << "\" fill=\"" << color << "\"/>\n";
    }

    void star(double x, double y, double r, const std::string& color) {
        os_ << "<path fill=\"" << color << "\" d=\"";
        for (int i = 0; i < 10; ++i) {
            const double rr = (i % 2 == 0) ? r : 0.45 * r;
            const double a = -M_PI / 2 + i * M_PI / 5;
            os_ << (i == 0 ? "M" : "L") << fmt_g6(x + rr * std::cos(a)) << " "
                << fmt_g6(y + rr * std::sin(a));
        }
        os_ << "Z\"/>\n";
    }

    void text(double x, double y, const std::string& s, double size = 11,
              const std::string& anchor = "start", const std::string& color = "#222222") {
        os_ << "<text x=\"" << fmt_g6(x) << "\" y=\"" << fmt_g6(y) << "\" font-size=\""
            << fmt_g6(size) << "\" font-family=\"Helvetica,Arial,sans-serif\" text-anchor=\""
            << anchor << "\" fill=\"" << color << "\">" << s << "</text>\n";
    }

    std::string finish() {
        os_ << "</svg>\n";
        return os_.str();
    }

  private:
    double w_, h_;
    std::ostringstream os_;
};

/// Maps data coordinates into one panel's pixel box.
struct Scale {
    double x0, x1, y0, y1;          // data ranges
    double px, py, pw, ph;          // pixel box
    double x(double v) const { return px + (v - x0) / (x1 - x0) * pw; }
    double y(double v) const { return py + ph - (v - y0) / (y1 - y0) * ph; }
};

inline void draw_axes(Svg& svg, const Scale& s, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel) {
    svg.line(s.px, s.py, s.px, s.py + s.ph, "#444444");
    svg.line(s.px, s.py + s.ph, s.px + s.pw, s.py + s.ph, "#444444");
    svg.text(s.px + s.pw / 2, s.py - 6, title, 12, "middle");
    svg.text(s.px + s.pw / 2, s.py + s.ph + 28, xlabel, 11, "middle");
    svg.text(s.px - 34, s.py + s.ph / 2, ylabel, 11, "middle");
    for (int t = 0; t <= 4; ++t) {
        const double yv = s.y0 + t * (s.y1 - s.y0) / 4;
        svg.line(s.px - 3, s.y(yv), s.px, s.y(yv), "#444444");
        svg.text(s.px - 6, s.y(yv) + 4, fmt_g6(yv), 9, "end");
    }
}

struct Key {
    std::string mode;
    std::string policy;
    int n;
    int m;
    bool operator<(const Key& o) const {
        return std::tie(mode, policy, n, m) < std::tie(o.mode, o.policy, o.n, o.m);
    }
};

struct Agg {
    std::vector<double> lengths;  // per-seed means
    std::vector<double> perfs;
    std::set<std::uint64_t> seeds;

    double mean_length() const {
        double a = 0;
        for (double v : lengths) a += v;
        return lengths.empty() ? 0.0 : a / lengths.size();
    }
    double mean_perf() const {
        double a = 0;
        for (double v : perfs) a += v;
        return perfs.empty() ? 0.0 : a / perfs.size();
    }
    double std_perf() const {
        if (perfs.size() < 2) return 0.0;
        const double m = mean_perf();
        double v = 0;
        for (double x : perfs) v += (x - m) * (x - m);
        return std::sqrt(v / (perfs.size() - 1));
    }
    double std_length() const {
        if (lengths.size() < 2) return 0.0;
        const double m = mean_length();
        double v = 0;
        for (double x : lengths) v += (x - m) * (x - m);
        return std::sqrt(v / (lengths.size() - 1));
    }
};

struct BoundCsvRow {
    int n, m;
    double p_hat, gen_error, d_param, d_struct, lower_bound;
    std::string mode;
    double empirical;
    bool above;
    double alpha_n, c_prime;
};

inline std::vector<BoundCsvRow> load_bounds(const std::filesystem::path& p) {
    std::vector<BoundCsvRow> out;
    if (!std::filesystem::exists(p)) return out;
    std::ifstream in(p);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (first) {
            first = false;
            continue;
        }
        const auto f = store::split_csv(line);
        if (f.size() < 12) continue;
        BoundCsvRow r;
        r.n = std::stoi(f[0]);
        r.m = std::stoi(f[1]);
        r.p_hat = std::stod(f[2]);
        r.gen_error = std::stod(f[3]);
        r.d_param = std::stod(f[4]);
        r.d_struct = std::stod(f[5]);
        r.lower_bound = std::stod(f[6]);
        r.mode = f[7];
        r.empirical = std::stod(f[8]);
        r.above = f[9] == "1";
        r.alpha_n = std::stod(f[10]);
        r.c_prime = std::stod(f[11]);
        out.push_back(r);
    }
    return out;
}

inline std::string color_for_mode(const std::string& mode) {
    if (mode == "zero_shot") return "#1f77b4";
    if (mode == "finetune") return "#2ca02c";
    if (mode == "scratch") return "#9467bd";
    return "#7f7f7f";
}

}  // namespace detail

/// Loads a results store directory, renders the requested figure set and a
/// markdown summary into the output directory, and returns the written file
/// names. Throws std::runtime_error when there is nothing to plot and
/// InvariantViolation when rows break the store's invariants.
inline std::vector<std::string> generate_report(const ReportSpec& spec) {
    namespace fs = std::filesystem;
    const fs::path in_dir(spec.results_dir);
    const fs::path res_csv = in_dir / "results.csv";
    if (!fs::exists(res_csv))
        throw std::runtime_error("report: no results.csv in " + spec.results_dir);

    store::ResultsStore st(in_dir);
    const auto rows = st.rows();
    if (rows.empty()) throw std::runtime_error("report: no rows in results.csv");

    for (const auto& r : rows) {
        if (!(r.mean_normalized_perf >= -1e-9 && r.mean_normalized_perf <= 1.0 + 1e-9))
            throw InvariantViolation("report: normalized perf outside [0,1] in run " + r.run_id);
        if (!std::isfinite(r.mean_tour_length) || r.mean_tour_length < 0)
            throw InvariantViolation("report: bad tour length in run " + r.run_id);
        if ((r.mode == "zero_shot" || r.mode == "finetune") && r.m_target < r.n_source)
            throw InvariantViolation("report: transfer row with m < n in run " + r.run_id);
    }

    fs::create_directories(spec.output_dir);
    std::vector<std::string> written;

    // Aggregate across seeds.
    std::map<detail::Key, detail::Agg> agg;
    std::set<std::uint64_t> all_seeds;
    std::set<std::string> policies;
    std::set<int> sources;
    std::set<int> sizes;
    for (const auto& r : rows) {
        auto& a = agg[{r.mode, r.policy, r.n_source, r.m_target}];
        a.lengths.push_back(r.mean_tour_length);
        a.perfs.push_back(r.mean_normalized_perf);
        a.seeds.insert(r.seed);
        all_seeds.insert(r.seed);
        if (r.mode == "zero_shot") {
            policies.insert(r.policy);
            sources.insert(r.n_source);
        }
        sizes.insert(r.m_target);
    }
    std::vector<std::string> skipped;
    const auto complete = [&](const detail::Key& k) {
        const auto it = agg.find(k);
        if (it == agg.end() || it->second.seeds != all_seeds) {
            if (it != agg.end()) {
                std::ostringstream os;
                os << k.mode << " " << k.policy << " n=" << k.n << " m=" << k.m << " ("
                   << it->second.seeds.size() << "/" << all_seeds.size() << " seeds)";
                skipped.push_back(os.str());
            }
            return false;
        }
        return true;
    };

    // ------------------------------------------------------ transfer panels
    if (spec.transfer_panels && !policies.empty()) {
        const double pw = 300, ph = 200, mx = 60, my = 44, gapx = 46, gapy = 58;
        std::vector<std::pair<std::string, int>> panels;
        for (const auto& pol : policies)
            for (int n : sources) panels.push_back({pol, n});
        const int ncols = static_cast<int>(policies.size());
        const int nrows = static_cast<int>(sources.size());
        detail::Svg svg(mx + ncols * (pw + gapx), my + nrows * (ph + gapy));
        int idx = 0;
        for (int n : sources) {
            for (const auto& pol : policies) {
                const int col = idx % ncols, row = idx / ncols;
                ++idx;
                double ymax = 0.0;
                std::vector<int> ms;
                for (int m : sizes)
                    if (m >= n) ms.push_back(m);
                for (const auto& [k, a] : agg)
                    ymax = std::max(ymax, a.mean_length() + a.std_length());
                detail::Scale s{static_cast<double>(ms.front()), static_cast<double>(ms.back()),
                                0.0,
                                ymax * 1.05 + 1e-9,
                                mx + col * (pw + gapx),
                                my + row * (ph + gapy),
                                pw,
                                ph};
                if (ms.size() == 1) s.x1 = s.x0 + 1;
                detail::draw_axes(svg, s, pol + ", source n=" + std::to_string(n),
                                  "target size m", "mean tour cost");
                for (const std::string mode : {"zero_shot", "finetune"}) {
                    std::vector<std::pair<double, double>> pts;
                    for (int m : ms) {
                        detail::Key k{mode, pol, n, m};
                        if (mode == "finetune" && m == n) continue;
                        if (!complete(k)) continue;
                        pts.push_back({s.x(m), s.y(agg[k].mean_length())});
                    }
                    svg.polyline(pts, detail::color_for_mode(mode));
                    for (const auto& [x, y] : pts) svg.circle(x, y, 3, detail::color_for_mode(mode));
                }
                // Scratch-at-target reference.
                {
                    std::vector<std::pair<double, double>> pts;
                    for (int m : ms) {
                        detail::Key k{"scratch", pol, m, m};
                        if (!complete(k)) continue;
                        pts.push_back({s.x(m), s.y(agg[k].mean_length())});
                    }
                    svg.polyline(pts, detail::color_for_mode("scratch"));
                    for (const auto& [x, y] : pts)
                        svg.square(x, y, 2.5, detail::color_for_mode("scratch"));
                }
                // Classical baseline, dashed.
                {
                    std::vector<std::pair<double, double>> pts;
                    for (int m : ms) {
                        detail::Key k{"baseline_christofides", "christofides", m, m};
                        if (!complete(k)) continue;
                        pts.push_back({s.x(m), s.y(agg[k].mean_length())});
                    }
                    svg.polyline(pts, "#d62728", 1.5, true);
                }
                for (int m : ms) {
                    svg.line(s.x(m), s.py + s.ph, s.x(m), s.py + s.ph + 3, "#444444");
                    svg.text(s.x(m), s.py + s.ph + 14, std::to_string(m), 9, "middle");
                }
            }
        }
        svg.text(mx, 16,
                 "zero-shot (blue), fine-tuned (green), scratch-at-target (purple), "
                 "christofides (red dashed)",
                 11);
        const auto path = fs::path(spec.output_dir) / "transfer_panels.svg";
        std::ofstream(path, std::ios::trunc) << svg.finish();
        written.push_back(path.string());
    }

    // -------------------------------------------------------- bound overlay
    const auto bounds = detail::load_bounds(in_dir / "bounds.csv");
    if (spec.bound_overlay && !bounds.empty()) {
        std::set<int> bns;
        for (const auto& b : bounds) bns.insert(b.n);
        const double pw = 300, ph = 200, mx = 60, my = 44, gapy = 58;
        detail::Svg svg(mx + pw + 60, my + bns.size() * (ph + gapy));
        int row = 0;
        for (int n : bns) {
            std::vector<int> ms;
            for (const auto& b : bounds)
                if (b.n == n) ms.push_back(b.m);
            std::sort(ms.begin(), ms.end());
            detail::Scale s{static_cast<double>(std::min(n, ms.front())),
                            static_cast<double>(ms.back()),
                            0.0,
                            1.08,
                            mx,
                            my + row * (ph + gapy),
                            pw,
                            ph};
            if (s.x1 <= s.x0) s.x1 = s.x0 + 1;
            detail::draw_axes(svg, s, "eqc zero-shot bound, source n=" + std::to_string(n),
                              "target size m", "normalized performance");
            std::vector<std::pair<double, double>> bound_pts;
            for (const auto& b : bounds) {
                if (b.n != n) continue;
                bound_pts.push_back({s.x(b.m), s.y(std::clamp(b.lower_bound, 0.0, 1.0))});
                // Empirical zero-shot circles with across-seed std error bars.
                detail::Key k{"zero_shot", "eqc", n, b.m};
                const auto it = agg.find(k);
                if (it != agg.end()) {
                    const double sd = it->second.std_perf();
                    svg.line(s.x(b.m), s.y(std::clamp(b.empirical - sd, 0.0, 1.0)), s.x(b.m),
                             s.y(std::clamp(b.empirical + sd, 0.0, 1.0)), "#1f77b4");
                }
                svg.circle(s.x(b.m), s.y(b.empirical), 3.5, "#1f77b4");
                detail::Key fk{"finetune", "eqc", n, b.m};
                const auto fit = agg.find(fk);
                if (fit != agg.end() && fit->second.seeds == all_seeds)
                    svg.square(s.x(b.m), s.y(fit->second.mean_perf()), 3, "#2ca02c");
                svg.line(s.x(b.m), s.py + s.ph, s.x(b.m), s.py + s.ph + 3, "#444444");
                svg.text(s.x(b.m), s.py + s.ph + 14, std::to_string(b.m), 9, "middle");
            }
            svg.polyline(bound_pts, "#d62728", 1.5, true);
            // Source-task star at m=n.
            const auto star_row = std::find_if(bounds.begin(), bounds.end(),
                                               [&](const auto& b) { return b.n == n; });
            if (star_row != bounds.end()) svg.star(s.x(n), s.y(star_row->p_hat), 6, "#111111");
            ++row;
        }
        svg.text(mx, 16,
                 "star: source P-hat; circles: zero-shot; dashed: theoretical lower bound; "
                 "squares: fine-tuned",
                 11);
        const auto path = fs::path(spec.output_dir) / "bound_overlay.svg";
        std::ofstream(path, std::ios::trunc) << svg.finish();
        written.push_back(path.string());
    }

    // ------------------------------------------------------ learning curves
    if (spec.learning_curves) {
        // Average the per-episode normalized perf across seeds per trained size.
        std::map<std::pair<std::string, int>, std::vector<std::vector<double>>> curves;
        for (const auto& r : rows) {
            if (r.mode != "scratch") continue;
            const auto tpath = st.telemetry_path(r.run_id);
            if (!fs::exists(tpath)) continue;
            std::ifstream in(tpath);
            std::string line;
            bool first = true;
            std::vector<double> perf;
            while (std::getline(in, line)) {
                if (first) {
                    first = false;
                    continue;
                }
                const auto f = store::split_csv(line);
                if (f.size() >= 3) perf.push_back(std::stod(f[2]));
            }
            if (!perf.empty()) curves[{r.policy, r.m_target}].push_back(std::move(perf));
        }
        if (!curves.empty()) {
            const double pw = 420, ph = 220, mx = 60, my = 44;
            detail::Svg svg(mx + pw + 60, my + curves.size() * (ph + 58));
            int row = 0;
            for (const auto& [key, seed_curves] : curves) {
                std::size_t len = 0;
                for (const auto& c : seed_curves) len = std::max(len, c.size());
                std::vector<double> mean(len, 0.0);
                std::vector<int> cnt(len, 0);
                for (const auto& c : seed_curves)
                    for (std::size_t i = 0; i < c.size(); ++i) {
                        mean[i] += c[i];
                        ++cnt[i];
                    }
                for (std::size_t i = 0; i < len; ++i) mean[i] /= std::max(1, cnt[i]);
                // Rolling mean, window 25.
                std::vector<double> smooth(len, 0.0);
                double acc = 0.0;
                for (std::size_t i = 0; i < len; ++i) {
                    acc += mean[i];
                    if (i >= 25) acc -= mean[i - 25];
                    smooth[i] = acc / std::min<std::size_t>(i + 1, 25);
                }
                detail::Scale s{0.0, static_cast<double>(std::max<std::size_t>(1, len - 1)),
                                0.0, 1.05, mx, my + row * (ph + 58), pw, ph};
                detail::draw_axes(svg, s,
                                  key.first + " scratch training at k=" +
                                      std::to_string(key.second),
                                  "episode", "normalized performance");
                std::vector<std::pair<double, double>> pts;
                for (std::size_t i = 0; i < len; ++i)
                    pts.push_back({s.x(static_cast<double>(i)), s.y(smooth[i])});
                svg.polyline(pts, "#1f77b4");
                ++row;
            }
            const auto path = fs::path(spec.output_dir) / "learning_curves.svg";
            std::ofstream(path, std::ios::trunc) << svg.finish();
            written.push_back(path.string());
        }
    }

    // ------------------------------------------------------------- summary
    {
        std::ostringstream md;
        md << "# Experiment summary\n\n";
        md << "| mode | policy | n | m | seeds | mean tour cost | mean normalized perf |\n";
        md << "|---|---|---|---|---|---|---|\n";
        for (const auto& [k, a] : agg)
            md << "| " << k.mode << " | " << k.policy << " | " << k.n << " | " << k.m << " | "
               << a.seeds.size() << " | " << fmt_g6(a.mean_length()) << " | "
               << fmt_g6(a.mean_perf()) << " |\n";
        if (!bounds.empty()) {
            md << "\n## Transfer bound (" << bounds.front().mode << " mode)\n\n";
            md << "| n | m | P-hat | gen err | d_param | d_struct | lower bound | empirical | "
                  "above |\n|---|---|---|---|---|---|---|---|---|\n";
            for (const auto& b : bounds)
                md << "| " << b.n << " | " << b.m << " | " << fmt_g6(b.p_hat) << " | "
                   << fmt_g6(b.gen_error) << " | " << fmt_g6(b.d_param) << " | "
                   << fmt_g6(b.d_struct) << " | " << fmt_g6(b.lower_bound) << " | "
                   << fmt_g6(b.empirical) << " | " << (b.above ? "yes" : "NO") << " |\n";
        }
        if (!skipped.empty()) {
            md << "\n## Skipped cells (incomplete rows)\n\n";
            std::sort(skipped.begin(), skipped.end());
            skipped.erase(std::unique(skipped.begin(), skipped.end()), skipped.end());
            for (const auto& s : skipped) md << "- " << s << "\n";
        }
        const auto path = fs::path(spec.output_dir) / "summary.md";
        std::ofstream(path, std::ios::trunc) << md.str();
        written.push_back(path.string());
    }
    return written;
}

}  // namespace qtransfer::report
