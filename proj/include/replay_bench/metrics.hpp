#pragma once

// Accuracy metrics, replay histograms, the per-run metric log with its CSV
// form, and multi-seed aggregation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "replay_bench/clt.hpp"
#include "replay_bench/data.hpp"
#include "replay_bench/errors.hpp"
#include "replay_bench/replay.hpp"

namespace replay_bench::metrics {

using data::LabeledDataset;

inline constexpr int kHistogramClasses = 10;

/// Fraction of rows whose argmax prediction equals the label.
template <replay::Labeler C>
double accuracy(const C& classifier, const LabeledDataset& ds) {
    if (ds.empty()) throw ArgumentError("accuracy: empty dataset");
    const auto pred = classifier.predict(ds.images);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) correct += pred[i] == ds.labels[i];
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

inline double accuracy(const nn::Network<float>& net, const LabeledDataset& ds) {
    struct View {
        const nn::Network<float>& net;
        std::vector<int> predict(const Matrix& x) const { return nn::predict(net, x); }
    };
    return accuracy(View{net}, ds);
}

/// Accuracy restricted to sub-task 0's test data.
template <typename C>
double first_task_accuracy(const C& classifier, const clt::TaskSequence& seq) {
    if (seq.sub_tasks.empty()) throw ArgumentError("first_task_accuracy: empty task sequence");
    return accuracy(classifier, seq.sub_tasks.front().test);
}

/// Per-class label counts, zero-filled over num_classes.
inline std::vector<std::size_t> replay_histogram(std::span<const int> labels, int num_classes = kHistogramClasses) {
    std::vector<std::size_t> h(static_cast<std::size_t>(num_classes), 0);
    for (int l : labels) {
        if (l < 0 || l >= num_classes) throw ArgumentError("replay_histogram: label out of range");
        ++h[static_cast<std::size_t>(l)];
    }
    return h;
}

inline std::vector<std::size_t> replay_histogram(const LabeledDataset& ds, int num_classes = kHistogramClasses) {
    return replay_histogram(std::span<const int>(ds.labels), num_classes);
}

/// Total-variation distance between two distributions over the same support.
inline double total_variation(std::span<const double> p, std::span<const double> q) {
    double tv = 0.0;
    const std::size_t n = std::max(p.size(), q.size());
    for (std::size_t i = 0; i < n; ++i) tv += std::abs((i < p.size() ? p[i] : 0.0) - (i < q.size() ? q[i] : 0.0));
    return 0.5 * tv;
}

// ---------------------------------------------------------------------------
// Metric log

struct MetricRecord {
    std::string strategy;
    std::string clt;
    std::uint64_t seed = 0;
    int subtask = 0;
    int epoch = 0;
    double whole_acc = 0.0;
    double first_acc = 0.0;
    double cls_loss = 0.0;
    double gen_loss = std::nan("");  // absent for strategies without a generator
    std::array<std::size_t, kHistogramClasses> hist{};

    std::size_t replay_count() const {
        std::size_t n = 0;
        for (auto h : hist) n += h;
        return n;
    }
};

struct MetricLog {
    std::vector<MetricRecord> records;

    bool empty() const { return records.empty(); }
    std::size_t size() const { return records.size(); }
    const MetricRecord& back() const { return records.back(); }
};

inline constexpr const char* kCsvHeader =
    "strategy,clt,seed,subtask,epoch,whole_acc,first_acc,cls_loss,gen_loss,"
    "hist_0,hist_1,hist_2,hist_3,hist_4,hist_5,hist_6,hist_7,hist_8,hist_9";

namespace detail {

inline std::string format_fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::string format_loss(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace detail

/// One CSV line per record, fixed formatting so equal logs give equal bytes.
inline std::string to_csv(const MetricLog& log) {
    std::ostringstream out;
    out << kCsvHeader << '\n';
    for (const auto& r : log.records) {
        out << r.strategy << ',' << r.clt << ',' << r.seed << ',' << r.subtask << ',' << r.epoch << ','
            << detail::format_fixed6(r.whole_acc) << ',' << detail::format_fixed6(r.first_acc) << ','
            << detail::format_loss(r.cls_loss) << ',' << detail::format_loss(r.gen_loss);
        for (auto h : r.hist) out << ',' << h;
        out << '\n';
    }
    return out.str();
}

inline MetricLog parse_csv(std::istream& in, const std::string& origin = "<stream>") {
    MetricLog log;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != kCsvHeader) throw FormatError("unexpected metrics header in " + origin);
            header_seen = true;
            continue;
        }
        const auto f = detail::split_csv_line(line);
        if (f.size() != 9 + kHistogramClasses) throw FormatError("malformed metrics row in " + origin + ": " + line);
        MetricRecord r;
        try {
            r.strategy = f[0];
            r.clt = f[1];
            r.seed = std::stoull(f[2]);
            r.subtask = std::stoi(f[3]);
            r.epoch = std::stoi(f[4]);
            r.whole_acc = std::stod(f[5]);
            r.first_acc = std::stod(f[6]);
            r.cls_loss = std::stod(f[7]);
            r.gen_loss = std::stod(f[8]);
            for (int c = 0; c < kHistogramClasses; ++c) r.hist[static_cast<std::size_t>(c)] = std::stoull(f[9 + static_cast<std::size_t>(c)]);
        } catch (const std::logic_error&) {
            throw FormatError("unparsable metrics row in " + origin + ": " + line);
        }
        log.records.push_back(std::move(r));
    }
    if (!header_seen) throw FormatError("no metrics header in " + origin);
    return log;
}

inline void export_csv(const MetricLog& log, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << to_csv(log);
    if (!out) throw IoError("short write to " + path.string());
}

inline MetricLog import_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_csv(in, path.string());
}

/// True when both logs print identically in CSV form.
inline bool same_to_printed_precision(const MetricLog& a, const MetricLog& b) { return to_csv(a) == to_csv(b); }

// ---------------------------------------------------------------------------
// Aggregation over seeds

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
};

inline MeanStd mean_std(std::span<const double> values) {
    MeanStd out;
    if (values.empty()) return out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(var / static_cast<double>(values.size()));
    return out;
}

struct AggregateCurve {
    std::string strategy;
    std::string clt;
    std::vector<std::uint64_t> seeds;
    std::vector<int> subtask;  // per evaluation index
    std::vector<int> epoch;
    std::vector<MeanStd> whole;
    std::vector<MeanStd> first;
    std::vector<std::array<double, kHistogramClasses>> mean_hist;

    std::size_t size() const { return subtask.size(); }
    int num_subtasks() const { return subtask.empty() ? 0 : subtask.back() + 1; }
};

/// Pointwise mean and population std across seeds, one curve per
/// (strategy, clt). Logs in a group must share the evaluation grid.
inline std::vector<AggregateCurve> aggregate_seeds(const std::vector<MetricLog>& logs) {
    std::map<std::pair<std::string, std::string>, std::vector<const MetricLog*>> groups;
    for (const auto& log : logs) {
        if (log.empty()) continue;
        groups[{log.records.front().strategy, log.records.front().clt}].push_back(&log);
    }
    std::vector<AggregateCurve> out;
    for (auto& [key, members] : groups) {
        std::sort(members.begin(), members.end(),
                  [](const MetricLog* a, const MetricLog* b) { return a->records.front().seed < b->records.front().seed; });
        const MetricLog& ref = *members.front();
        for (const auto* m : members) {
            if (m->size() != ref.size())
                throw AlignmentError("logs for " + key.first + "/" + key.second + " have different lengths");
            for (std::size_t i = 0; i < ref.size(); ++i)
                if (m->records[i].subtask != ref.records[i].subtask || m->records[i].epoch != ref.records[i].epoch)
                    throw AlignmentError("logs for " + key.first + "/" + key.second +
                                         " disagree on the evaluation grid at index " + std::to_string(i));
        }
        AggregateCurve curve;
        curve.strategy = key.first;
        curve.clt = key.second;
        for (const auto* m : members) curve.seeds.push_back(m->records.front().seed);
        for (std::size_t i = 0; i < ref.size(); ++i) {
            std::vector<double> w, f;
            std::array<double, kHistogramClasses> h{};
            for (const auto* m : members) {
                w.push_back(m->records[i].whole_acc);
                f.push_back(m->records[i].first_acc);
                for (int c = 0; c < kHistogramClasses; ++c)
                    h[static_cast<std::size_t>(c)] += static_cast<double>(m->records[i].hist[static_cast<std::size_t>(c)]) /
                                                       static_cast<double>(members.size());
            }
            curve.subtask.push_back(ref.records[i].subtask);
            curve.epoch.push_back(ref.records[i].epoch);
            curve.whole.push_back(mean_std(w));
            curve.first.push_back(mean_std(f));
            curve.mean_hist.push_back(h);
        }
        out.push_back(std::move(curve));
    }
    return out;
}

/// CSV of aggregate curves with a leading comment naming the std convention.
inline std::string aggregates_to_csv(const std::vector<AggregateCurve>& curves) {
    std::ostringstream out;
    out << "# std is the population standard deviation across seeds\n";
    out << "strategy,clt,num_seeds,index,subtask,epoch,whole_mean,whole_std,first_mean,first_std\n";
    for (const auto& c : curves)
        for (std::size_t i = 0; i < c.size(); ++i)
            out << c.strategy << ',' << c.clt << ',' << c.seeds.size() << ',' << i << ',' << c.subtask[i] << ','
                << c.epoch[i] << ',' << detail::format_fixed6(c.whole[i].mean) << ','
                << detail::format_fixed6(c.whole[i].std) << ',' << detail::format_fixed6(c.first[i].mean) << ','
                << detail::format_fixed6(c.first[i].std) << '\n';
    return out.str();
}

}  // namespace replay_bench::metrics
