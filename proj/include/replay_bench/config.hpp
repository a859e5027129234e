#pragma once

// Strategies, run configuration, the two named profiles and the flat
// key=value config file.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "replay_bench/clt.hpp"
#include "replay_bench/errors.hpp"
#include "replay_bench/ewc.hpp"
#include "replay_bench/generative.hpp"
#include "replay_bench/nn/adam.hpp"
#include "replay_bench/nn/architecture.hpp"
#include "replay_bench/replay.hpp"

namespace replay_bench {

enum class StrategyKind { naive, ewc, marginal_gan, marginal_wgangp, conditional_cgan, conditional_cvae };

inline constexpr StrategyKind kAllStrategies[] = {StrategyKind::naive,           StrategyKind::ewc,
                                                  StrategyKind::marginal_gan,    StrategyKind::marginal_wgangp,
                                                  StrategyKind::conditional_cgan, StrategyKind::conditional_cvae};

inline std::string to_string(StrategyKind k) {
    switch (k) {
        case StrategyKind::naive: return "naive";
        case StrategyKind::ewc: return "ewc";
        case StrategyKind::marginal_gan: return "marginal_gan";
        case StrategyKind::marginal_wgangp: return "marginal_wgangp";
        case StrategyKind::conditional_cgan: return "conditional_cgan";
        case StrategyKind::conditional_cvae: return "conditional_cvae";
    }
    return "?";
}

inline std::vector<std::string> strategy_names() {
    std::vector<std::string> out;
    for (auto k : kAllStrategies) out.push_back(to_string(k));
    return out;
}

inline StrategyKind parse_strategy_kind(std::string_view s) {
    for (auto k : kAllStrategies)
        if (to_string(k) == s) return k;
    std::string valid;
    for (const auto& n : strategy_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ArgumentError("unknown strategy '" + std::string(s) + "' (valid: " + valid + ")");
}

inline bool is_replay(StrategyKind k) { return k != StrategyKind::naive && k != StrategyKind::ewc; }

inline bool is_marginal(StrategyKind k) {
    return k == StrategyKind::marginal_gan || k == StrategyKind::marginal_wgangp;
}

inline gen::GeneratorKind generator_kind(StrategyKind k) {
    switch (k) {
        case StrategyKind::marginal_gan: return gen::GeneratorKind::gan;
        case StrategyKind::marginal_wgangp: return gen::GeneratorKind::wgan_gp;
        case StrategyKind::conditional_cgan: return gen::GeneratorKind::cgan;
        case StrategyKind::conditional_cvae: return gen::GeneratorKind::cvae;
        default: throw KindError("strategy " + to_string(k) + " has no generator");
    }
}

struct EwcConfig {
    double lambda = 100.0;
    std::size_t fisher_samples = 1024;
    ewc::ConsolidationPolicy policy = ewc::ConsolidationPolicy::sum_fisher;
    ewc::FisherLabels labels = ewc::FisherLabels::sampled;
};

struct Strategy {
    StrategyKind kind = StrategyKind::naive;
    std::optional<replay::ReplayBudget> budget;  // replay kinds only
    std::optional<EwcConfig> ewc;               // ewc only

    static Strategy make(StrategyKind kind, const replay::ReplayBudget& budget = {}, const EwcConfig& ewc_config = {}) {
        Strategy s;
        s.kind = kind;
        if (is_replay(kind)) s.budget = budget;
        if (kind == StrategyKind::ewc) s.ewc = ewc_config;
        return s;
    }

    void validate() const {
        if (is_replay(kind) != budget.has_value())
            throw ArgumentError("strategy " + to_string(kind) + ": budget must be present exactly for replay kinds");
        if ((kind == StrategyKind::ewc) != ewc.has_value())
            throw ArgumentError("strategy " + to_string(kind) + ": ewc settings must be present exactly for ewc");
        if (budget) budget->validate();
        if (ewc) {
            if (!(ewc->lambda >= 0.0)) throw ArgumentError("ewc lambda must be non-negative");
            if (ewc->fisher_samples == 0) throw ArgumentError("ewc fisher sample count must be positive");
        }
    }

    /// Directory-safe name; non-default budgets are appended so that
    /// reduced-budget runs do not collide with balanced ones.
    std::string label() const {
        std::string out = to_string(kind);
        if (budget && budget->schedule != replay::Schedule::balanced) {
            out += "-" + replay::to_string(budget->schedule);
            if (budget->schedule == replay::Schedule::scaled) {
                std::ostringstream a;
                a << budget->alpha;
                out += a.str();
            }
        }
        if (budget && budget->base_n != replay::ReplayBudget{}.base_n) out += "-n" + std::to_string(budget->base_n);
        if (ewc && ewc->lambda != EwcConfig{}.lambda) {
            std::ostringstream l;
            l << ewc->lambda;
            out += "-lambda" + l.str();
        }
        return out;
    }
};

struct RunConfig {
    std::string profile = "full";
    std::string dataset = "mnist";
    clt::CltKind clt = clt::CltKind::disjoint;
    int num_subtasks = 5;  // rotations / permutations
    int epochs_per_subtask = 25;
    int eval_every = 1;
    int batch_size = 64;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7};
    std::uint64_t split_seed = 0;
    std::size_t val_count = 5000;
    std::string classifier_tag{nn::kClassifierTag};
    nn::AdamHyper classifier_adam{0.01, 0.5, 0.999, 1e-8};
    gen::GenerativeHyper generative{};
    replay::ReplayBudget budget{};
    EwcConfig ewc{};
    /// C_t and G_t continue from C_{t-1} and G_{t-1}; false re-initializes.
    bool warm_start = true;

    void validate() const {
        if (epochs_per_subtask < 1) throw ArgumentError("epochs_per_subtask must be at least 1");
        if (eval_every < 1) throw ArgumentError("eval_every must be at least 1");
        if (batch_size < 1) throw ArgumentError("batch_size must be at least 1");
        if (seeds.empty()) throw ArgumentError("at least one seed is required");
        if (num_subtasks < 1) throw ArgumentError("num_subtasks must be at least 1");
        if (generative.n_critic < 1) throw ArgumentError("n_critic must be at least 1");
        if (!(generative.width_scale > 0.0)) throw ArgumentError("width_scale must be positive");
        budget.validate();
        nn::parse_architecture(classifier_tag);
    }
};

inline RunConfig full_profile() { return RunConfig{}; }

/// Five epochs, three seeds, generator and companion hidden widths halved.
inline RunConfig desk_profile() {
    RunConfig c;
    c.profile = "desk";
    c.epochs_per_subtask = 5;
    c.seeds = {0, 1, 2};
    c.generative.width_scale = 0.5;
    return c;
}

inline RunConfig profile_config(std::string_view name) {
    if (name == "full") return full_profile();
    if (name == "desk") return desk_profile();
    throw ArgumentError("unknown profile '" + std::string(name) + "' (desk, full)");
}

// ---------------------------------------------------------------------------
// Flat key=value form

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string format_double(double v) {
    std::ostringstream o;
    o.precision(17);
    o << v;
    return o.str();
}

inline std::vector<std::uint64_t> parse_seed_list(const std::string& v) {
    std::vector<std::uint64_t> out;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto dash = item.find('-');
        if (dash != std::string::npos && dash > 0) {
            const auto lo = std::stoull(item.substr(0, dash));
            const auto hi = std::stoull(item.substr(dash + 1));
            if (hi < lo) throw ArgumentError("bad seed range '" + item + "'");
            for (auto s = lo; s <= hi; ++s) out.push_back(s);
        } else {
            out.push_back(std::stoull(item));
        }
    }
    return out;
}

inline std::string format_seed_list(const std::vector<std::uint64_t>& seeds) {
    std::string out;
    for (auto s : seeds) out += (out.empty() ? "" : ",") + std::to_string(s);
    return out;
}

}  // namespace detail

/// Accepts "0,1,2" or ranges such as "0-7".
inline std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    try {
        auto s = detail::parse_seed_list(text);
        if (s.empty()) throw ArgumentError("empty seed list");
        return s;
    } catch (const std::logic_error&) {
        throw ArgumentError("cannot parse seed list '" + text + "'");
    }
}

/// Ordered key/value echo of a config; set_config_value accepts every key.
inline std::vector<std::pair<std::string, std::string>> config_items(const RunConfig& c) {
    return {
        {"profile", c.profile},
        {"dataset", c.dataset},
        {"clt", clt::to_string(c.clt)},
        {"num_subtasks", std::to_string(c.num_subtasks)},
        {"epochs_per_subtask", std::to_string(c.epochs_per_subtask)},
        {"eval_every", std::to_string(c.eval_every)},
        {"batch_size", std::to_string(c.batch_size)},
        {"seeds", detail::format_seed_list(c.seeds)},
        {"split_seed", std::to_string(c.split_seed)},
        {"val_count", std::to_string(c.val_count)},
        {"classifier_tag", c.classifier_tag},
        {"classifier_lr", detail::format_double(c.classifier_adam.lr)},
        {"generator_lr", detail::format_double(c.generative.adam.lr)},
        {"beta1", detail::format_double(c.classifier_adam.beta1)},
        {"beta2", detail::format_double(c.classifier_adam.beta2)},
        {"adam_eps", detail::format_double(c.classifier_adam.eps)},
        {"latent_dim", std::to_string(c.generative.latent_dim)},
        {"gp_lambda", detail::format_double(c.generative.gp_lambda)},
        {"n_critic", std::to_string(c.generative.n_critic)},
        {"width_scale", detail::format_double(c.generative.width_scale)},
        {"budget", replay::to_string(c.budget.schedule)},
        {"base_n", std::to_string(c.budget.base_n)},
        {"alpha", detail::format_double(c.budget.alpha)},
        {"ewc_lambda", detail::format_double(c.ewc.lambda)},
        {"fisher_samples", std::to_string(c.ewc.fisher_samples)},
        {"ewc_policy", ewc::to_string(c.ewc.policy)},
        {"warm_start", c.warm_start ? "true" : "false"},
    };
}

inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
    auto as_int = [&] { return std::stoi(value); };
    auto as_u64 = [&] { return static_cast<std::uint64_t>(std::stoull(value)); };
    auto as_double = [&] { return std::stod(value); };
    try {
        if (key == "profile") c.profile = value;
        else if (key == "dataset") c.dataset = value;
        else if (key == "clt") c.clt = clt::parse_clt_kind(value);
        else if (key == "num_subtasks") c.num_subtasks = as_int();
        else if (key == "epochs_per_subtask" || key == "epochs") c.epochs_per_subtask = as_int();
        else if (key == "eval_every") c.eval_every = as_int();
        else if (key == "batch_size") c.batch_size = as_int();
        else if (key == "seeds") c.seeds = parse_seeds(value);
        else if (key == "split_seed") c.split_seed = as_u64();
        else if (key == "val_count") c.val_count = static_cast<std::size_t>(as_u64());
        else if (key == "classifier_tag") c.classifier_tag = value;
        else if (key == "classifier_lr") c.classifier_adam.lr = as_double();
        else if (key == "generator_lr") c.generative.adam.lr = as_double();
        else if (key == "beta1") c.classifier_adam.beta1 = c.generative.adam.beta1 = as_double();
        else if (key == "beta2") c.classifier_adam.beta2 = c.generative.adam.beta2 = as_double();
        else if (key == "adam_eps") c.classifier_adam.eps = c.generative.adam.eps = as_double();
        else if (key == "latent_dim") c.generative.latent_dim = as_int();
        else if (key == "gp_lambda") c.generative.gp_lambda = as_double();
        else if (key == "n_critic") c.generative.n_critic = as_int();
        else if (key == "width_scale") c.generative.width_scale = as_double();
        else if (key == "budget") c.budget.schedule = replay::parse_schedule(value);
        else if (key == "base_n") c.budget.base_n = static_cast<std::size_t>(as_u64());
        else if (key == "alpha") c.budget.alpha = as_double();
        else if (key == "ewc_lambda") c.ewc.lambda = as_double();
        else if (key == "fisher_samples") c.ewc.fisher_samples = static_cast<std::size_t>(as_u64());
        else if (key == "ewc_policy") c.ewc.policy = ewc::parse_policy(value);
        else if (key == "warm_start") {
            if (value != "true" && value != "false") throw ArgumentError("warm_start must be true or false");
            c.warm_start = value == "true";
        } else throw ArgumentError("unknown config key '" + key + "'");
    } catch (const std::logic_error&) {
        throw ArgumentError("bad value '" + value + "' for config key '" + key + "'");
    }
}

inline std::string to_config_text(const RunConfig& c) {
    std::string out;
    for (const auto& [k, v] : config_items(c)) out += k + " = " + v + "\n";
    return out;
}

/// Applies `key = value` lines onto `base`. A `profile` line, if present,
/// must come first and resets the base to that profile.
inline RunConfig parse_config_text(const std::string& text, RunConfig base = {}) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool any = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ArgumentError("config line " + std::to_string(lineno) + ": expected key = value");
        const auto key = detail::trim(line.substr(0, eq));
        const auto value = detail::trim(line.substr(eq + 1));
        if (key == "profile") {
            if (any) throw ArgumentError("config line " + std::to_string(lineno) + ": profile must be the first key");
            base = profile_config(value);
        } else {
            set_config_value(base, key, value);
        }
        any = true;
    }
    return base;
}

inline RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), std::move(base));
}

}  // namespace replay_bench
