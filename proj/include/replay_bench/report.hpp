#pragma once

// Regenerates plots and a summary from a results directory, reading only
// metrics.csv and summary.json files.

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "replay_bench/log.hpp"
#include "replay_bench/matrix.hpp"
#include "replay_bench/metrics.hpp"
#include "replay_bench/plot.hpp"

namespace replay_bench::report {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct RunEntry {
    fs::path dir;
    json summary;
    metrics::MetricLog log;  // empty unless complete

    std::string status() const { return summary.value("status", "unknown"); }
    std::string clt() const { return summary.value("clt", ""); }
    std::string strategy() const { return summary.value("strategy", ""); }
};

/// Every run directory below `root` holding a summary.json, in path order.
inline std::vector<RunEntry> scan_results(const fs::path& root) {
    std::vector<fs::path> dirs;
    if (fs::is_directory(root))
        for (const auto& e : fs::recursive_directory_iterator(root))
            if (e.is_regular_file() && e.path().filename() == "summary.json" &&
                e.path().parent_path().filename() != "report")
                dirs.push_back(e.path().parent_path());
    std::sort(dirs.begin(), dirs.end());
    std::vector<RunEntry> out;
    for (const auto& d : dirs) {
        RunEntry r;
        r.dir = d;
        r.summary = runner::read_json(d / "summary.json");
        if (r.status() == "complete") r.log = metrics::import_csv(d / "metrics.csv");
        out.push_back(std::move(r));
    }
    return out;
}

/// Position of each record on a sub-task axis: sub-task t spans [t, t+1].
inline std::vector<double> subtask_axis(const metrics::AggregateCurve& c) {
    std::map<int, int> max_epoch;
    for (std::size_t i = 0; i < c.size(); ++i) max_epoch[c.subtask[i]] = std::max(max_epoch[c.subtask[i]], c.epoch[i]);
    std::vector<double> x;
    for (std::size_t i = 0; i < c.size(); ++i)
        x.push_back(c.subtask[i] + static_cast<double>(c.epoch[i]) / std::max(1, max_epoch[c.subtask[i]]));
    return x;
}

inline plot::LineChart accuracy_chart(const std::vector<metrics::AggregateCurve>& curves, const std::string& clt,
                                      bool first_task) {
    plot::LineChart chart;
    chart.title = (first_task ? "First sub-task accuracy, " : "Whole test set accuracy, ") + clt;
    chart.xlabel = "sub-task";
    chart.ylabel = "accuracy";
    int num_subtasks = 1;
    for (const auto& c : curves) num_subtasks = std::max(num_subtasks, c.num_subtasks());
    chart.xmax = num_subtasks;
    for (int b = 1; b < num_subtasks; ++b) chart.boundaries.push_back(b);
    for (std::size_t k = 0; k < curves.size(); ++k) {
        const auto& c = curves[k];
        plot::Series s;
        s.name = c.strategy;
        s.color = plot::palette(k);
        s.x = subtask_axis(c);
        for (const auto& m : first_task ? c.first : c.whole) {
            s.y.push_back(m.mean);
            if (first_task) {
                s.lo.push_back(std::max(0.0, m.mean - m.std));
                s.hi.push_back(std::min(1.0, m.mean + m.std));
            }
        }
        chart.series.push_back(std::move(s));
    }
    return chart;
}

/// Class mix of the replay set in the last sub-task, per replaying strategy.
inline plot::BarChart histogram_chart(const std::vector<metrics::AggregateCurve>& curves, const std::string& clt) {
    plot::BarChart chart;
    chart.title = "Replayed class distribution (last sub-task), " + clt;
    chart.xlabel = "class";
    chart.ylabel = "fraction of replay set";
    for (int c = 0; c < metrics::kHistogramClasses; ++c) chart.categories.push_back(std::to_string(c));
    double ymax = 0.0;
    for (std::size_t k = 0; k < curves.size(); ++k) {
        const auto& c = curves[k];
        if (c.mean_hist.empty()) continue;
        const auto& h = c.mean_hist.back();
        double total = 0.0;
        for (double v : h) total += v;
        if (total <= 0.0) continue;
        plot::BarSeries s;
        s.name = c.strategy;
        s.color = plot::palette(k);
        for (double v : h) {
            s.values.push_back(v / total);
            ymax = std::max(ymax, v / total);
        }
        chart.series.push_back(std::move(s));
    }
    chart.ymax = ymax > 0 ? std::min(1.0, std::ceil(ymax * 10.0) / 10.0) : 1.0;
    return chart;
}

/// Final whole-test accuracy per strategy label; used when reduced budgets exist.
inline plot::BarChart budget_chart(const std::vector<metrics::AggregateCurve>& curves, const std::string& clt) {
    plot::BarChart chart;
    chart.title = "Final accuracy by replay budget, " + clt;
    chart.xlabel = "strategy";
    chart.ylabel = "final whole-test accuracy";
    plot::BarSeries s;
    s.name = "mean over seeds";
    s.color = plot::palette(0);
    for (const auto& c : curves) {
        if (c.whole.empty()) continue;
        chart.categories.push_back(c.strategy);
        s.values.push_back(c.whole.back().mean);
    }
    chart.series.push_back(std::move(s));
    return chart;
}

struct ReportOptions {
    plot::Format format = plot::Format::svg;
    fs::path out_dir;  // defaults to <results>/report
};

struct ReportResult {
    std::vector<fs::path> files;
    std::size_t complete = 0;
    std::size_t failed = 0;
};

inline ReportResult write_report(const fs::path& results_dir, const ReportOptions& options = {}) {
    ReportResult result;
    const auto runs = scan_results(results_dir);
    if (runs.empty()) {
        log::warning("no runs found under " + results_dir.string());
        return result;
    }
    const fs::path out = options.out_dir.empty() ? results_dir / "report" : options.out_dir;
    fs::create_directories(out);

    std::map<std::string, std::vector<metrics::MetricLog>> by_clt;
    json runs_json = json::array();
    json failed_json = json::array();
    for (const auto& r : runs) {
        json entry;
        entry["dir"] = fs::relative(r.dir, results_dir).generic_string();
        entry["clt"] = r.clt();
        entry["strategy"] = r.strategy();
        entry["seed"] = r.summary.value("seed", std::uint64_t{0});
        entry["status"] = r.status();
        if (r.summary.contains("final_whole_acc")) entry["final_whole_acc"] = r.summary["final_whole_acc"];
        if (r.summary.contains("final_first_acc")) entry["final_first_acc"] = r.summary["final_first_acc"];
        if (r.status() == "complete") {
            ++result.complete;
            by_clt[r.clt()].push_back(r.log);
        } else {
            ++result.failed;
            if (r.summary.contains("error")) entry["error"] = r.summary["error"];
            failed_json.push_back(entry);
        }
        runs_json.push_back(entry);
    }

    json aggregates = json::array();
    std::vector<metrics::AggregateCurve> all_curves;
    for (const auto& [clt_name, logs] : by_clt) {
        const auto curves = metrics::aggregate_seeds(logs);
        auto add = [&](const auto& chart, const std::string& stem) {
            for (auto& p : plot::save(chart, out / (stem + "_" + clt_name), options.format)) result.files.push_back(p);
        };
        add(accuracy_chart(curves, clt_name, false), "accuracy_over_time");
        add(accuracy_chart(curves, clt_name, true), "first_task_accuracy");
        add(histogram_chart(curves, clt_name), "replay_histogram");
        const bool reduced = std::any_of(curves.begin(), curves.end(), [](const metrics::AggregateCurve& c) {
            return c.strategy.find("-constant") != std::string::npos || c.strategy.find("-scaled") != std::string::npos;
        });
        if (reduced) add(budget_chart(curves, clt_name), "budget_comparison");
        for (const auto& c : curves) {
            json a;
            a["clt"] = c.clt;
            a["strategy"] = c.strategy;
            a["seeds"] = c.seeds;
            a["final_whole_mean"] = c.whole.back().mean;
            a["final_whole_std"] = c.whole.back().std;
            a["final_first_mean"] = c.first.back().mean;
            a["final_first_std"] = c.first.back().std;
            aggregates.push_back(a);
            all_curves.push_back(c);
        }
    }
    runner::write_text_atomic(out / "aggregates.csv", metrics::aggregates_to_csv(all_curves));
    result.files.push_back(out / "aggregates.csv");

    json summary;
    summary["num_runs"] = runs.size();
    summary["num_complete"] = result.complete;
    summary["num_failed"] = result.failed;
    summary["std_convention"] = "population";
    summary["failed_runs"] = failed_json;
    summary["aggregates"] = aggregates;
    summary["runs"] = runs_json;
    runner::write_text_atomic(out / "summary.json", summary.dump(2) + "\n");
    result.files.push_back(out / "summary.json");
    return result;
}

}  // namespace replay_bench::report
