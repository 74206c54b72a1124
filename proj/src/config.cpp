#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>

#include "sharp_neuron/cli.hpp"
#include "sharp_neuron/errors.hpp"

namespace sn::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const char* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (v.empty() || ec != std::errc{} || ptr != end) throw ConfigError("bad value for " + key + ": '" + v + "'");
    return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const char* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (v.empty() || ec != std::errc{} || ptr != end) throw ConfigError("bad integer for " + key + ": '" + v + "'");
    return out;
}

std::size_t to_size(const std::string& key, const std::string& v) { return static_cast<std::size_t>(to_uint(key, v)); }

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    if (std::any_of(out.begin(), out.end(), [](const std::string& s) { return s.empty(); })) {
        throw ConfigError("empty entry in list '" + text + "'");
    }
    return out;
}

}  // namespace

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    for (const auto& s : split_list(text)) seeds.push_back(to_uint("seeds", s));
    return seeds;
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> values;
    for (const auto& s : split_list(text)) values.push_back(to_double("values", s));
    return values;
}

void set_key(ExperimentConfig& cfg, const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    if (key == "distribution") cfg.distribution = v;
    else if (key == "activation") cfg.activation = v;
    else if (key == "noise") cfg.noise = v;
    else if (key == "d") cfg.d = to_size(key, v);
    else if (key == "W") cfg.W = to_double(key, v);
    else if (key == "wstar_norm") cfg.wstar_norm = to_double(key, v);
    else if (key == "eps") cfg.eps = to_double(key, v);
    else if (key == "delta") cfg.delta = to_double(key, v);
    else if (key == "mu") cfg.mu = v == "auto" ? std::nullopt : std::optional<double>(to_double(key, v));
    else if (key == "gamma") cfg.gamma = to_double(key, v);
    else if (key == "seeds") cfg.seeds = parse_seeds(v);
    else if (key == "T") cfg.T = to_size(key, v);
    else if (key == "N") cfg.N = to_size(key, v);
    else if (key == "eta") cfg.eta = to_double(key, v);
    else if (key == "M") cfg.M = to_double(key, v);
    else if (key == "r_eps") cfg.r_eps = to_double(key, v);
    else if (key == "project") {
        if (v != "none" && v != "ball_W") throw ConfigError("project must be none or ball_W");
        cfg.project = v;
    } else if (key == "mode") {
        if (v != "auto" && v != "monotone" && v != "nonmonotone") {
            throw ConfigError("mode must be auto, monotone or nonmonotone");
        }
        cfg.mode = v;
    } else if (key == "c_N") cfg.derive.c_N = to_double(key, v);
    else if (key == "c_H") cfg.derive.c_H = to_double(key, v);
    else if (key == "T_max") cfg.derive.T_max = to_size(key, v);
    else if (key == "N_max") cfg.derive.N_max = to_size(key, v);
    else if (key == "stop_threshold") cfg.stop_threshold = to_double(key, v);
    else if (key == "wallclock") cfg.wallclock = to_bool(key, v);
    else if (key == "holdout_n") cfg.holdout_n = to_size(key, v);
    else if (key == "eval_n") cfg.eval_n = to_size(key, v);
    else if (key == "margin_n") cfg.margin_n = to_size(key, v);
    else if (key == "n_probes") cfg.n_probes = to_size(key, v);
    else if (key == "n_mc") cfg.n_mc = to_size(key, v);
    else throw ConfigError("unknown config key '" + key + "'");
}

void load_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        }
        set_key(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
}

}  // namespace sn::cli
