#include "berngraph/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "berngraph/errors.hpp"
#include "berngraph/parallel.hpp"

namespace berngraph {

namespace {

std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    size_t e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

} // namespace

KvMap parse_kv_text(const std::string& text, const std::string& origin) {
    KvMap kv;
    std::istringstream in(text);
    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw Error(ErrorCode::parse,
                        fmt::format("{}:{}: expected key=value, got '{}'", origin, line_no, t));
        }
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1)); // last occurrence wins
    }
    return kv;
}

KvMap load_kv_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, fmt::format("cannot open config '{}'", path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_kv_text(buf.str(), path.string());
}

// ---------------------------------------------------------------------------

namespace {

int64_t to_int(const std::string& key, const std::string& value) {
    int64_t out = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || p != value.data() + value.size()) {
        throw Error(ErrorCode::invalid, fmt::format("{}: expected integer, got '{}'", key, value));
    }
    return out;
}

uint64_t to_uint(const std::string& key, const std::string& value) {
    uint64_t out = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || p != value.data() + value.size()) {
        throw Error(ErrorCode::invalid,
                    fmt::format("{}: expected unsigned integer, got '{}'", key, value));
    }
    return out;
}

double to_double(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const double out = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::exception&) {
        throw Error(ErrorCode::invalid, fmt::format("{}: expected number, got '{}'", key, value));
    }
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw Error(ErrorCode::invalid,
                fmt::format("{}: expected true|false, got '{}'", key, value));
}

std::vector<double> to_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) out.push_back(to_double(key, trim(item)));
    return out;
}

std::vector<int32_t> to_int_list(const std::string& key, const std::string& value) {
    std::vector<int32_t> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        out.push_back(static_cast<int32_t>(to_int(key, trim(item))));
    }
    return out;
}

KvMap merged_config(const std::string& config_path, const std::string& overrides_text) {
    KvMap kv;
    if (!config_path.empty()) kv = load_kv_file(config_path);
    if (!overrides_text.empty()) {
        for (auto& [k, v] : parse_kv_text(overrides_text, "overrides")) kv[k] = std::move(v);
    }
    return kv;
}

} // namespace

RunConfig RunConfig::resolve(const std::string& config_path, const std::string& overrides_text) {
    KvMap kv = merged_config(config_path, overrides_text);
    RunConfig cfg;
    bool encoding_seed_set = false;
    bool bootstrap_seed_set = false;

    for (const auto& [key, value] : kv) {
        if (key == "cohort") cfg.cohort_path = value;
        else if (key == "ratios") {
            const auto r = to_double_list(key, value);
            if (r.size() != 3) {
                throw Error(ErrorCode::invalid, "ratios: expected three comma-separated fractions");
            }
            cfg.ratios = {r[0], r[1], r[2]};
        } else if (key == "split_seed") cfg.split_seed = to_uint(key, value);
        else if (key == "node_mode") cfg.node_mode = node_mode_from_string(value);
        else if (key == "edge_mode") cfg.edge_mode = edge_mode_from_string(value);
        else if (key == "encoding_seed") { cfg.encoding_seed = to_uint(key, value); encoding_seed_set = true; }
        else if (key == "min_joint") cfg.min_joint = to_int(key, value);
        else if (key == "stats_all_rows") cfg.stats_all_rows = to_bool(key, value);
        else if (key == "model") cfg.model = value;
        else if (key == "learning_rate") cfg.learning_rate = to_double(key, value);
        else if (key == "epochs") cfg.epochs = static_cast<int>(to_int(key, value));
        else if (key == "batch_size") cfg.batch_size = static_cast<int>(to_int(key, value));
        else if (key == "seed") cfg.seed = to_uint(key, value);
        else if (key == "hidden") cfg.hidden = static_cast<int>(to_int(key, value));
        else if (key == "mlp_hidden") cfg.mlp_hidden = static_cast<int>(to_int(key, value));
        else if (key == "layers") cfg.layers = static_cast<int>(to_int(key, value));
        else if (key == "patience") cfg.patience = static_cast<int>(to_int(key, value));
        else if (key == "lr_input") cfg.lr_input = value;
        else if (key == "bootstrap_rounds") cfg.bootstrap_rounds = static_cast<int>(to_int(key, value));
        else if (key == "bootstrap_frac") cfg.bootstrap_frac = to_double(key, value);
        else if (key == "bootstrap_seed") { cfg.bootstrap_seed = to_uint(key, value); bootstrap_seed_set = true; }
        else if (key == "threads") cfg.threads = static_cast<int>(to_int(key, value));
        else if (key == "deterministic") cfg.deterministic = to_bool(key, value);
        else if (key == "row") cfg.row = to_int(key, value);
        else if (key == "top_k") cfg.top_k = to_int(key, value);
        else {
            throw Error(ErrorCode::invalid, fmt::format("unknown config key '{}'", key));
        }
    }
    if (!encoding_seed_set) cfg.encoding_seed = cfg.seed;
    if (!bootstrap_seed_set) cfg.bootstrap_seed = cfg.seed;

    // validate before any computation starts
    double ratio_sum = 0;
    for (double r : cfg.ratios) {
        if (!(r > 0.0)) throw Error(ErrorCode::invalid, "ratios must be positive");
        ratio_sum += r;
    }
    if (std::abs(ratio_sum - 1.0) > 1e-9) {
        throw Error(ErrorCode::invalid, fmt::format("ratios must sum to 1, got {}", ratio_sum));
    }
    if (cfg.model != "gnn" && cfg.model != "lr" && cfg.model != "mlp") {
        throw Error(ErrorCode::invalid,
                    fmt::format("model must be gnn|lr|mlp, got '{}'", cfg.model));
    }
    if (cfg.lr_input != "raw" && cfg.lr_input != "encoded") {
        throw Error(ErrorCode::invalid,
                    fmt::format("lr_input must be raw|encoded, got '{}'", cfg.lr_input));
    }
    if (!(cfg.learning_rate > 0.0)) throw Error(ErrorCode::invalid, "learning_rate must be > 0");
    if (cfg.epochs < 1) throw Error(ErrorCode::invalid, "epochs must be >= 1");
    if (cfg.batch_size < 1) throw Error(ErrorCode::invalid, "batch_size must be >= 1");
    if (cfg.hidden < 1) throw Error(ErrorCode::invalid, "hidden must be >= 1");
    if (cfg.mlp_hidden < 1) throw Error(ErrorCode::invalid, "mlp_hidden must be >= 1");
    if (cfg.layers < 1) throw Error(ErrorCode::invalid, "layers must be >= 1");
    if (cfg.patience < 0) throw Error(ErrorCode::invalid, "patience must be >= 0");
    if (cfg.min_joint < 1) throw Error(ErrorCode::invalid, "min_joint must be >= 1");
    if (cfg.bootstrap_rounds < 1) throw Error(ErrorCode::invalid, "bootstrap_rounds must be >= 1");
    if (!(cfg.bootstrap_frac > 0.0 && cfg.bootstrap_frac <= 1.0)) {
        throw Error(ErrorCode::invalid, "bootstrap_frac must be in (0, 1]");
    }
    if (cfg.threads < 0) throw Error(ErrorCode::invalid, "threads must be >= 0");
    if (cfg.row < 0) throw Error(ErrorCode::invalid, "row must be >= 0");
    if (cfg.top_k < 1) throw Error(ErrorCode::invalid, "top_k must be >= 1");
    return cfg;
}

std::string RunConfig::echo() const {
    std::string out;
    auto line = [&out](const std::string& k, const std::string& v) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    };
    line("batch_size", fmt::format("{}", batch_size));
    line("bootstrap_frac", fmt::format("{}", bootstrap_frac));
    line("bootstrap_rounds", fmt::format("{}", bootstrap_rounds));
    line("bootstrap_seed", fmt::format("{}", bootstrap_seed));
    line("cohort", cohort_path);
    line("deterministic", deterministic ? "true" : "false");
    line("edge_mode", to_string(edge_mode));
    line("encoding_seed", fmt::format("{}", encoding_seed));
    line("epochs", fmt::format("{}", epochs));
    line("hidden", fmt::format("{}", hidden));
    line("layers", fmt::format("{}", layers));
    line("learning_rate", fmt::format("{}", learning_rate));
    line("lr_input", lr_input);
    line("min_joint", fmt::format("{}", min_joint));
    line("mlp_hidden", fmt::format("{}", mlp_hidden));
    line("model", model);
    line("node_mode", to_string(node_mode));
    line("patience", fmt::format("{}", patience));
    line("ratios", fmt::format("{},{},{}", ratios[0], ratios[1], ratios[2]));
    line("row", fmt::format("{}", row));
    line("seed", fmt::format("{}", seed));
    line("split_seed", fmt::format("{}", split_seed));
    line("stats_all_rows", stats_all_rows ? "true" : "false");
    line("threads", fmt::format("{}", threads));
    line("top_k", fmt::format("{}", top_k));
    return out;
}

TrainOptions RunConfig::train_options() const {
    TrainOptions opt;
    opt.learning_rate = learning_rate;
    opt.epochs = epochs;
    opt.batch_size = batch_size;
    opt.seed = seed;
    opt.patience = patience;
    opt.threads = resolved_threads();
    return opt;
}

int RunConfig::resolved_threads() const {
    if (deterministic) return 1;
    return resolve_threads(threads);
}

// ---------------------------------------------------------------------------

SynthConfig resolve_synth_config(const std::string& config_path,
                                 const std::string& overrides_text) {
    KvMap kv = merged_config(config_path, overrides_text);
    SynthConfig cfg;
    for (const auto& [key, value] : kv) {
        if (key == "n_patients") cfg.n_patients = to_int(key, value);
        else if (key == "n_events") cfg.n_events = static_cast<int32_t>(to_int(key, value));
        else if (key == "n_drugs") cfg.n_drugs = static_cast<int32_t>(to_int(key, value));
        else if (key == "n_causes") cfg.n_causes = static_cast<int32_t>(to_int(key, value));
        else if (key == "cause_prevalence") cfg.cause_prevalence = to_double_list(key, value);
        else if (key == "cause_activation") cfg.cause_activation = to_double_list(key, value);
        else if (key == "background_rate") cfg.background_rate = to_double(key, value);
        else if (key == "label_noise") cfg.label_noise = to_double(key, value);
        else if (key == "seed") cfg.seed = to_uint(key, value);
        else if (key.starts_with("cause_events.")) {
            const auto idx = to_int(key, key.substr(13));
            if (cfg.cause_events.size() <= static_cast<size_t>(idx)) {
                cfg.cause_events.resize(static_cast<size_t>(idx) + 1);
            }
            cfg.cause_events[static_cast<size_t>(idx)] = to_int_list(key, value);
        } else if (key.starts_with("rule.")) {
            const auto idx = to_int(key, key.substr(5));
            if (cfg.rules.size() <= static_cast<size_t>(idx)) {
                cfg.rules.resize(static_cast<size_t>(idx) + 1);
            }
            const size_t colon = value.find(':');
            if (colon == std::string::npos) {
                throw Error(ErrorCode::invalid,
                            fmt::format("{}: expected any:<events> or all:<events>", key));
            }
            const std::string kind = value.substr(0, colon);
            DrugRule rule;
            if (kind == "any") rule.kind = DrugRule::Kind::any_of;
            else if (kind == "all") rule.kind = DrugRule::Kind::all_of;
            else {
                throw Error(ErrorCode::invalid,
                            fmt::format("{}: rule kind must be any|all, got '{}'", key, kind));
            }
            rule.events = to_int_list(key, value.substr(colon + 1));
            cfg.rules[static_cast<size_t>(idx)] = std::move(rule);
        } else {
            throw Error(ErrorCode::invalid, fmt::format("unknown simulate config key '{}'", key));
        }
    }
    // incomplete rule/cause lists would leave default-constructed holes
    for (size_t i = 0; i < cfg.rules.size(); ++i) {
        if (cfg.rules[i].events.empty()) {
            throw Error(ErrorCode::invalid, fmt::format("rule.{} is missing", i));
        }
    }
    if (!cfg.cause_events.empty()) {
        for (size_t i = 0; i < cfg.cause_events.size(); ++i) {
            if (cfg.cause_events[i].empty()) {
                throw Error(ErrorCode::invalid, fmt::format("cause_events.{} is missing", i));
            }
        }
    }
    SynthConfig validated = cfg;
    validated.finalize();
    return validated;
}

std::string echo_synth_config(const SynthConfig& config) {
    SynthConfig cfg = config;
    cfg.finalize();
    std::string out;
    out += fmt::format("background_rate={}\n", cfg.background_rate);
    out += "cause_activation=";
    for (size_t i = 0; i < cfg.cause_activation.size(); ++i) {
        out += fmt::format("{}{}", i ? "," : "", cfg.cause_activation[i]);
    }
    out += "\n";
    for (size_t i = 0; i < cfg.cause_events.size(); ++i) {
        out += fmt::format("cause_events.{}=", i);
        for (size_t k = 0; k < cfg.cause_events[i].size(); ++k) {
            out += fmt::format("{}{}", k ? "," : "", cfg.cause_events[i][k]);
        }
        out += "\n";
    }
    out += "cause_prevalence=";
    for (size_t i = 0; i < cfg.cause_prevalence.size(); ++i) {
        out += fmt::format("{}{}", i ? "," : "", cfg.cause_prevalence[i]);
    }
    out += "\n";
    out += fmt::format("label_noise={}\n", cfg.label_noise);
    out += fmt::format("n_causes={}\n", cfg.n_causes);
    out += fmt::format("n_drugs={}\n", cfg.n_drugs);
    out += fmt::format("n_events={}\n", cfg.n_events);
    out += fmt::format("n_patients={}\n", cfg.n_patients);
    for (size_t i = 0; i < cfg.rules.size(); ++i) {
        out += fmt::format("rule.{}={}:", i,
                           cfg.rules[i].kind == DrugRule::Kind::any_of ? "any" : "all");
        for (size_t k = 0; k < cfg.rules[i].events.size(); ++k) {
            out += fmt::format("{}{}", k ? "," : "", cfg.rules[i].events[k]);
        }
        out += "\n";
    }
    out += fmt::format("seed={}\n", cfg.seed);
    return out;
}

} // namespace berngraph
