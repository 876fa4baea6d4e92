#include "greybox/experiment.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

namespace greybox {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : value) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

double to_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const auto t = trim(text);
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty() || !std::isfinite(v))
        throw ConfigError(key, "expected a number, got '" + text + "'");
    return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& text) {
    const auto t = trim(text);
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec == std::errc() && p == t.data() + t.size() && !t.empty()) return v;
    // accept integral scientific notation such as 1e6
    double d = 0.0;
    const auto [q, ec2] = std::from_chars(t.data(), t.data() + t.size(), d);
    if (ec2 == std::errc() && q == t.data() + t.size() && d >= 0.0 && d <= 9007199254740992.0 && d == std::floor(d))
        return std::uint64_t(d);
    throw ConfigError(key, "expected a nonnegative integer, got '" + text + "'");
}

bool to_bool(const std::string& key, const std::string& text) {
    const auto t = trim(text);
    if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
    if (t == "false" || t == "no" || t == "0" || t == "off") return false;
    throw ConfigError(key, "expected true or false, got '" + text + "'");
}

std::vector<std::uint64_t> to_uint_list(const std::string& key, const std::string& text) {
    std::vector<std::uint64_t> out;
    for (const auto& item : split_list(text)) {
        const auto dots = item.find("..");
        if (dots == std::string::npos) {
            out.push_back(to_uint(key, item));
            continue;
        }
        const auto lo = to_uint(key, item.substr(0, dots));
        const auto hi = to_uint(key, item.substr(dots + 2));
        if (hi < lo) throw ConfigError(key, "empty range '" + item + "'");
        for (auto v = lo; v <= hi; ++v) out.push_back(v);
    }
    return out;
}

std::vector<double> to_double_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(to_double(key, item));
    return out;
}

Cell to_cell(const std::string& key, const std::string& text) {
    const auto parts = split_list(text);
    if (parts.size() != 2) throw ConfigError(key, "expected 'x,y', got '" + text + "'");
    return {int(to_uint(key, parts[0])), int(to_uint(key, parts[1]))};
}

const std::map<std::string, std::set<std::string>>& allowed_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"experiment",
         {"environment", "methods", "extraction", "seeds", "checkpoints", "output", "planner", "tolerance",
          "max_iterations", "inject_true_parameters", "record_wall_time"}},
        {"collection", {"mode", "budget", "horizon", "epsilon", "lr_exponent"}},
        {"queue", {"buffer", "servers", "injection_rate", "exit_probabilities", "gamma"}},
        {"gridworld",
         {"width", "height", "wind_strengths", "wind_probs", "slip_prob", "start", "goal", "gamma", "tying_mode"}},
        {"bounds", {"delta", "target_epsilon", "n_k", "lipschitz_pairs", "sigma"}},
    };
    return keys;
}

class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    std::optional<std::string> get(const std::string& section, const std::string& key) const {
        const auto sec = tree_.get_child_optional(pt::ptree::path_type(section, '\0'));
        if (!sec) return std::nullopt;
        const auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
        if (!v) return std::nullopt;
        return trim(*v);
    }

private:
    const pt::ptree& tree_;
};

}  // namespace

std::vector<std::uint64_t> default_checkpoints(std::uint64_t budget) {
    if (budget == 0) return {};
    const double lo = budget > 1000 ? 3.0 : 0.0;
    const double hi = std::log10(double(budget));
    std::vector<std::uint64_t> out;
    for (int i = 0; i < 20; ++i) {
        const double e = lo + (hi - lo) * double(i) / 19.0;
        auto v = std::uint64_t(std::llround(std::pow(10.0, e)));
        v = std::clamp<std::uint64_t>(v, 1, budget);
        if (out.empty() || v > out.back()) out.push_back(v);
    }
    out.back() = budget;
    return out;
}

std::vector<std::string> known_methods(EnvironmentKind kind) {
    if (kind == EnvironmentKind::queue) return {"structural", "entrywise", "qlearning"};
    return {"structural", "more-info", "least-info", "entrywise", "qlearning"};
}

ExperimentConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config", "line " + std::to_string(e.line()) + ": " + e.message());
    }
    for (const auto& [section, body] : tree) {
        const auto it = allowed_keys().find(section);
        if (it == allowed_keys().end()) {
            if (!body.data().empty()) throw ConfigError(section, "key outside any section");
            throw ConfigError(section, "unknown section");
        }
        for (const auto& [key, value] : body) {
            if (!it->second.count(key)) throw ConfigError(section + "." + key, "unknown key");
        }
    }

    const Reader r(tree);
    ExperimentConfig cfg;
    const auto with = [&](const char* section, const char* key, auto&& apply) {
        if (auto v = r.get(section, key)) apply(std::string(key), *v);
    };

    with("experiment", "environment", [&](const std::string& k, const std::string& v) {
        if (v == "queue") cfg.environment = EnvironmentKind::queue;
        else if (v == "gridworld") cfg.environment = EnvironmentKind::gridworld;
        else throw ConfigError(k, "expected queue or gridworld, got '" + v + "'");
    });
    cfg.methods = cfg.environment == EnvironmentKind::queue ? std::vector<std::string>{"structural", "entrywise"}
                                                            : std::vector<std::string>{"more-info", "least-info", "entrywise"};
    with("experiment", "methods", [&](const std::string&, const std::string& v) { cfg.methods = split_list(v); });
    with("experiment", "extraction", [&](const std::string& k, const std::string& v) {
        if (v == "oracle") cfg.extraction = Extraction::oracle;
        else if (v == "strict") cfg.extraction = Extraction::strict;
        else throw ConfigError(k, "expected oracle or strict, got '" + v + "'");
    });
    cfg.seeds = to_uint_list("seeds", "0..9");
    with("experiment", "seeds", [&](const std::string& k, const std::string& v) { cfg.seeds = to_uint_list(k, v); });
    bool explicit_checkpoints = false;
    with("experiment", "checkpoints", [&](const std::string& k, const std::string& v) {
        cfg.checkpoints = to_uint_list(k, v);
        explicit_checkpoints = true;
    });
    with("experiment", "output", [&](const std::string& k, const std::string& v) {
        if (v.empty()) throw ConfigError(k, "must not be empty");
        cfg.output = v;
    });
    with("experiment", "planner", [&](const std::string& k, const std::string& v) {
        if (v == "pi" || v == "policy_iteration") cfg.planner = PlannerKind::policy_iteration;
        else if (v == "vi" || v == "value_iteration") cfg.planner = PlannerKind::value_iteration;
        else throw ConfigError(k, "expected pi or vi, got '" + v + "'");
    });
    with("experiment", "tolerance", [&](const std::string& k, const std::string& v) {
        cfg.planner_cfg.residual_tolerance = to_double(k, v);
        if (!(cfg.planner_cfg.residual_tolerance > 0.0)) throw ConfigError(k, "must be positive");
    });
    with("experiment", "max_iterations", [&](const std::string& k, const std::string& v) {
        cfg.planner_cfg.max_iterations = to_uint(k, v);
        if (cfg.planner_cfg.max_iterations == 0) throw ConfigError(k, "must be at least 1");
    });
    with("experiment", "inject_true_parameters",
         [&](const std::string& k, const std::string& v) { cfg.inject_true_parameters = to_bool(k, v); });
    with("experiment", "record_wall_time",
         [&](const std::string& k, const std::string& v) { cfg.record_wall_time = to_bool(k, v); });

    with("collection", "mode", [&](const std::string& k, const std::string& v) {
        try {
            cfg.collection = parse_collection_mode(v);
        } catch (const std::invalid_argument&) {
            throw ConfigError(k, "expected generative or rollout, got '" + v + "'");
        }
    });
    with("collection", "budget", [&](const std::string& k, const std::string& v) {
        cfg.budget = to_uint(k, v);
        if (cfg.budget == 0) throw ConfigError(k, "must be positive");
    });
    cfg.horizon = cfg.environment == EnvironmentKind::queue ? 200 : 0;
    with("collection", "horizon", [&](const std::string& k, const std::string& v) { cfg.horizon = to_uint(k, v); });
    with("collection", "epsilon", [&](const std::string& k, const std::string& v) {
        cfg.epsilon = to_double(k, v);
        if (!(cfg.epsilon >= 0.0 && cfg.epsilon <= 1.0)) throw ConfigError(k, "must lie in [0,1]");
    });
    with("collection", "lr_exponent", [&](const std::string& k, const std::string& v) {
        cfg.lr_exponent = to_double(k, v);
        if (!(cfg.lr_exponent > 0.0 && cfg.lr_exponent <= 1.0)) throw ConfigError(k, "must lie in (0,1]");
    });

    with("queue", "buffer", [&](const std::string& k, const std::string& v) { cfg.queue.buffer = to_uint(k, v); });
    with("queue", "servers", [&](const std::string& k, const std::string& v) { cfg.queue.servers = to_uint(k, v); });
    with("queue", "injection_rate", [&](const std::string& k, const std::string& v) { cfg.queue.injection_rate = to_double(k, v); });
    with("queue", "exit_probabilities",
         [&](const std::string& k, const std::string& v) { cfg.queue.exit_probabilities = to_double_list(k, v); });
    with("queue", "gamma", [&](const std::string& k, const std::string& v) { cfg.queue.gamma = to_double(k, v); });

    with("gridworld", "width", [&](const std::string& k, const std::string& v) { cfg.grid.width = int(to_uint(k, v)); });
    with("gridworld", "height", [&](const std::string& k, const std::string& v) { cfg.grid.height = int(to_uint(k, v)); });
    with("gridworld", "wind_strengths", [&](const std::string& k, const std::string& v) {
        cfg.grid.wind_strength.clear();
        for (auto s : to_uint_list(k, v)) cfg.grid.wind_strength.push_back(int(s));
    });
    with("gridworld", "wind_probs", [&](const std::string& k, const std::string& v) { cfg.grid.wind_prob = to_double_list(k, v); });
    // a single probability applies to every column
    if (cfg.grid.wind_prob.size() == 1) cfg.grid.wind_prob.assign(std::size_t(cfg.grid.width), cfg.grid.wind_prob[0]);
    with("gridworld", "slip_prob", [&](const std::string& k, const std::string& v) { cfg.grid.slip_prob = to_double(k, v); });
    with("gridworld", "start", [&](const std::string& k, const std::string& v) { cfg.grid.start = to_cell(k, v); });
    with("gridworld", "goal", [&](const std::string& k, const std::string& v) { cfg.grid.goal = to_cell(k, v); });
    with("gridworld", "gamma", [&](const std::string& k, const std::string& v) { cfg.grid.gamma = to_double(k, v); });
    with("gridworld", "tying_mode", [&](const std::string& k, const std::string& v) {
        try {
            cfg.grid.tying = parse_tying_mode(v);
        } catch (const std::invalid_argument&) {
            throw ConfigError(k, "expected more-info, least-info or entrywise, got '" + v + "'");
        }
    });

    with("bounds", "delta", [&](const std::string& k, const std::string& v) {
        cfg.bounds.delta = to_double(k, v);
        if (!(cfg.bounds.delta > 0.0 && cfg.bounds.delta < 1.0)) throw ConfigError(k, "must lie in (0,1)");
    });
    with("bounds", "target_epsilon", [&](const std::string& k, const std::string& v) {
        cfg.bounds.target_epsilon = to_double(k, v);
        if (!(cfg.bounds.target_epsilon > 0.0 && cfg.bounds.target_epsilon < 1.0)) throw ConfigError(k, "must lie in (0,1)");
    });
    with("bounds", "n_k", [&](const std::string& k, const std::string& v) {
        cfg.bounds.n_k = to_uint(k, v);
        if (cfg.bounds.n_k == 0) throw ConfigError(k, "must be positive");
    });
    with("bounds", "lipschitz_pairs", [&](const std::string& k, const std::string& v) {
        cfg.bounds.lipschitz_pairs = to_uint(k, v);
        if (cfg.bounds.lipschitz_pairs == 0) throw ConfigError(k, "must be positive");
    });
    with("bounds", "sigma", [&](const std::string& k, const std::string& v) {
        if (v == "worst") cfg.bounds.plugin_sigma = false;
        else if (v == "plugin") cfg.bounds.plugin_sigma = true;
        else throw ConfigError(k, "expected worst or plugin, got '" + v + "'");
    });

    if (!explicit_checkpoints) cfg.checkpoints = default_checkpoints(cfg.budget);
    validate_config(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    return parse_config(in);
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.seeds.empty()) throw ConfigError("seeds", "must list at least one seed");
    if (cfg.methods.empty()) throw ConfigError("methods", "must list at least one method");
    const auto known = known_methods(cfg.environment);
    std::set<std::string> seen;
    for (const auto& m : cfg.methods) {
        if (std::find(known.begin(), known.end(), m) == known.end())
            throw ConfigError("methods", "unknown method '" + m + "' for this environment");
        if (!seen.insert(m).second) throw ConfigError("methods", "duplicate method '" + m + "'");
    }
    std::set<std::uint64_t> seed_set(cfg.seeds.begin(), cfg.seeds.end());
    if (seed_set.size() != cfg.seeds.size()) throw ConfigError("seeds", "duplicate seed");
    if (cfg.checkpoints.empty()) throw ConfigError("checkpoints", "must list at least one checkpoint");
    for (std::size_t i = 0; i < cfg.checkpoints.size(); ++i) {
        if (cfg.checkpoints[i] == 0) throw ConfigError("checkpoints", "must be positive");
        if (i > 0 && cfg.checkpoints[i] <= cfg.checkpoints[i - 1])
            throw ConfigError("checkpoints", "must be strictly increasing");
    }
    if (cfg.checkpoints.back() > cfg.budget) throw ConfigError("checkpoints", "exceed the collection budget");
    try {
        if (cfg.environment == EnvironmentKind::queue) QueueModel{cfg.queue};
        else GridWorld{cfg.grid};
    } catch (const std::invalid_argument& e) {
        const std::string what = e.what();
        const auto colon = what.find(':');
        throw ConfigError(what.substr(0, colon), colon == std::string::npos ? what : trim(what.substr(colon + 1)));
    }
}

}  // namespace greybox
