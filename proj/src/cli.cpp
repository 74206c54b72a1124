#include "sharp_neuron/cli.hpp"

#include <fmt/core.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>

#include "sharp_neuron/diagnostics.hpp"
#include "sharp_neuron/errors.hpp"
#include "sharp_neuron/kernels.hpp"
#include "sharp_neuron/surrogate.hpp"

namespace sn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g17(double v) { return fmt::format("{:.17g}", v); }

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
}

json config_json(const ExperimentConfig& c) {
    json j;
    j["distribution"] = c.distribution;
    j["activation"] = c.activation;
    j["noise"] = c.noise;
    j["d"] = c.d;
    j["W"] = c.W;
    j["wstar_norm"] = c.wstar_norm;
    j["eps"] = c.eps;
    j["delta"] = c.delta;
    j["mu"] = c.mu ? json(*c.mu) : json("auto");
    j["gamma"] = c.gamma;
    j["seeds"] = c.seeds;
    j["project"] = c.project;
    j["mode"] = c.mode;
    j["c_N"] = c.derive.c_N;
    j["c_H"] = c.derive.c_H;
    j["T_max"] = c.derive.T_max;
    j["N_max"] = c.derive.N_max;
    j["stop_threshold"] = c.stop_threshold;
    j["wallclock"] = c.wallclock;
    j["holdout_n"] = c.holdout_n;
    j["eval_n"] = c.eval_n;
    j["margin_n"] = c.margin_n;
    j["n_probes"] = c.n_probes;
    j["n_mc"] = c.n_mc;
    auto opt = [](const auto& o) { return o ? json(*o) : json(nullptr); };
    j["overrides"] = {{"T", opt(c.T)}, {"N", opt(c.N)}, {"eta", opt(c.eta)}, {"M", opt(c.M)}, {"r_eps", opt(c.r_eps)}};
    return j;
}

json resolved_json(const ResolvedRun& r) {
    const LearnerConfig& l = r.learner;
    json j;
    j["distribution"] = distribution_id(r.spec);
    j["dim"] = r.spec.dim;
    j["tail_B"] = r.spec.tail_B;
    j["tail_rho"] = r.spec.tail_rho;
    j["activation"] = r.instance.activation.name;
    j["alpha"] = r.instance.activation.alpha;
    j["beta"] = r.instance.activation.beta;
    j["noise"] = noise_id(r.instance.noise);
    j["mode"] = r.mode == Mode::monotone ? "monotone" : "nonmonotone";
    j["W"] = l.W;
    j["eps"] = l.eps;
    j["delta"] = l.delta;
    j["mu"] = l.mu;
    j["margin_lambda"] = r.margin_lambda ? json(*r.margin_lambda) : json(nullptr);
    j["T"] = l.T;
    j["N"] = l.N;
    j["eta"] = l.eta;
    j["M"] = std::isfinite(l.M) ? json(l.M) : json("inf");
    j["r_eps"] = l.r_eps;
    j["T_theory"] = l.T_theory;
    j["N_theory"] = l.N_theory;
    j["derive"] = l.derive;
    j["degenerate"] = l.degenerate;
    j["project"] = l.project == Projection::none ? "none" : "ball_W";
    j["stop_threshold"] = l.stop_threshold;
    j["opt_upper_bound"] = r.instance.opt_upper_bound;
    j["wstar"] = r.instance.wstar;
    return j;
}

json seed_json(const SeedResult& s) {
    json j;
    j["seed"] = s.run.seed;
    j["resolved"] = resolved_json(s.run);
    j["iterations"] = s.result.trace.size() - 1;
    j["final_l2"] = s.final_l2;
    j["opt_certificate"] = s.opt_certificate;
    j["final_dist_sq"] = s.final_dist_sq;
    j["final_l2_holdout"] = s.result.trace.back().l2_holdout;
    j["final_w"] = s.result.w;
    return j;
}

std::vector<SeedResult> run_all(const ExperimentConfig& cfg) {
    if (cfg.seeds.empty()) throw ConfigError("no seeds given");
    std::vector<SeedResult> out;
    for (std::uint64_t seed : cfg.seeds) out.push_back(run_seed(cfg, seed));
    return out;
}

void write_run(const ExperimentConfig& cfg, const std::vector<SeedResult>& results, const fs::path& out) {
    fs::create_directories(out);
    write_file(out / "trace.csv", trace_csv(results));
    json summary;
    summary["config"] = config_json(cfg);
    summary["runs"] = json::array();
    for (const auto& s : results) summary["runs"].push_back(seed_json(s));
    write_file(out / "summary.json", summary.dump(2) + "\n");
}

// Maps exceptions to the exit-code contract.
int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const PreconditionError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return kNumericAbort;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

ExperimentConfig with_axis(ExperimentConfig cfg, const std::string& axis, double value) {
    if (axis == "noise_level") {
        NoiseModel base = parse_noise(cfg.noise);
        const std::string v = g17(value);
        switch (base.kind) {
            case NoiseKind::none:
            case NoiseKind::additive_bounded: cfg.noise = "add:" + v; break;
            case NoiseKind::flip_fraction: cfg.noise = "flip:" + v + ":" + g17(base.replacement_scale); break;
            case NoiseKind::oblivious_heavy: cfg.noise = "heavy:" + g17(base.tail_k) + ":" + v; break;
        }
    } else if (axis == "dim") {
        if (!(value >= 1.0) || value != std::floor(value)) throw ConfigError("dim values must be positive integers");
        cfg.d = static_cast<std::size_t>(value);
    } else if (axis == "batch_size") {
        if (!(value >= 1.0) || value != std::floor(value)) throw ConfigError("batch sizes must be positive integers");
        cfg.N = static_cast<std::size_t>(value);
    } else if (axis == "eps") {
        cfg.eps = value;
    } else {
        throw ConfigError("unknown sweep axis '" + axis + "' (noise_level, dim, batch_size, eps)");
    }
    return cfg;
}

void print_report_line(bool pass, const std::string& which, std::uint64_t seed, const std::string& detail) {
    std::cout << (pass ? "PASS " : "FAIL ") << which << " seed=" << seed << " " << detail << "\n";
}

json sharpness_json(const SharpnessReport& r) {
    return {{"mu_bar_hat", r.mu_bar_hat},
            {"probes", r.probes},
            {"min_ratio_point", r.min_ratio_point},
            {"min_ratio_std_error", r.min_ratio_std_error},
            {"max_std_error", r.max_std_error},
            {"excluded_ball_radius", std::isfinite(r.excluded_ball_radius) ? json(r.excluded_ball_radius) : json("inf")},
            {"n_mc", r.n_mc},
            {"degenerate", r.degenerate},
            {"pass", r.pass}};
}

}  // namespace

ResolvedRun resolve(const ExperimentConfig& cfg, std::uint64_t seed) {
    ResolvedRun r;
    r.seed = seed;
    r.spec = parse_distribution(cfg.distribution, cfg.d, seed);
    const Activation act = parse_activation(cfg.activation);
    const NoiseModel noise = parse_noise(cfg.noise, seed);
    if (!(cfg.wstar_norm > 0.0)) throw ConfigError("wstar_norm must be positive");
    Vector wstar = planted_direction(cfg.d, cfg.wstar_norm, seed);

    if (cfg.mode == "auto") r.mode = act.monotone ? Mode::monotone : Mode::nonmonotone;
    else r.mode = cfg.mode == "monotone" ? Mode::monotone : Mode::nonmonotone;

    double mu = 0.0;
    if (cfg.mu) {
        mu = *cfg.mu;
    } else {
        const auto cert = estimate_margin(r.spec, wstar, cfg.gamma, cfg.margin_n);
        if (cert.degenerate || !(cert.lambda > 0.0)) throw ConfigError("mu=auto: margin estimate is degenerate");
        r.margin_lambda = cert.lambda;
        mu = 0.1 * cert.lambda * cert.lambda * cfg.gamma * act.beta * r.spec.tail_rho / r.spec.tail_B;
    }

    r.learner = derive_params(r.spec, act, cfg.W, cfg.eps, cfg.delta, mu, cfg.derive);
    if (cfg.T) r.learner.T = *cfg.T;
    if (cfg.N) r.learner.N = *cfg.N;
    if (cfg.eta) r.learner.eta = *cfg.eta;
    if (cfg.M) r.learner.M = *cfg.M;
    if (cfg.r_eps) r.learner.r_eps = *cfg.r_eps;
    r.learner.derive = !(cfg.T || cfg.N || cfg.eta || cfg.M || cfg.r_eps);
    r.learner.project = cfg.project == "ball_W" ? Projection::ball_W : Projection::none;
    r.learner.stop_threshold = cfg.stop_threshold;

    r.instance = make_instance(r.spec, std::move(wstar), cfg.W, act, noise, cfg.eval_n);
    return r;
}

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    SeedResult s;
    s.run = resolve(cfg, seed);
    TrainOptions opts;
    opts.holdout_n = cfg.holdout_n;
    opts.wallclock = cfg.wallclock;
    s.result = train(s.run.learner, s.run.spec, s.run.instance, s.run.mode, opts);
    const Batch eval = generate(s.run.instance, s.run.spec, cfg.eval_n, Stream::evaluation, 1);
    s.final_l2 = l2_loss(s.result.w, eval, s.run.instance.activation);
    s.opt_certificate = eval.opt_certificate;
    s.final_dist_sq = dist_sq(s.result.w, s.run.instance.wstar);
    return s;
}

std::string trace_csv(const std::vector<SeedResult>& results) {
    std::string out = std::string(kTraceHeader) + "\n";
    for (const auto& s : results) {
        for (const auto& r : s.result.trace) {
            out += fmt::format("{},{},{},{},{},{}\n", s.run.seed, r.iter, g17(r.dist_sq), g17(r.grad_norm),
                               g17(r.l2_holdout), g17(r.wallclock_ms));
        }
    }
    return out;
}

int cmd_run(const ExperimentConfig& cfg, const fs::path& out) {
    return guarded([&] {
        const auto results = run_all(cfg);
        write_run(cfg, results, out);
        for (const auto& s : results) {
            std::cout << fmt::format("seed={} T={} N={} eta={} final_dist_sq={} final_l2={} opt_certificate={}\n",
                                     s.run.seed, s.run.learner.T, s.run.learner.N, g17(s.run.learner.eta),
                                     g17(s.final_dist_sq), g17(s.final_l2), g17(s.opt_certificate));
        }
        return static_cast<int>(kOk);
    });
}

int cmd_sweep(const ExperimentConfig& cfg, const std::string& axis, const std::vector<double>& values,
              const fs::path& out) {
    return guarded([&] {
        if (values.empty()) throw ConfigError("sweep needs at least one value");
        fs::create_directories(out);
        std::string long_csv = std::string(kSweepHeader) + "\n";
        std::string agg = "# axis_value median q25 q75\n";
        for (std::size_t i = 0; i < values.size(); ++i) {
            const ExperimentConfig sub = with_axis(cfg, axis, values[i]);
            const auto results = run_all(sub);
            write_run(sub, results, out / fmt::format("{}_{:03d}", axis, i));
            std::vector<double> finals;
            for (const auto& s : results) {
                const double ratio = s.opt_certificate > 0.0 ? s.final_l2 / s.opt_certificate : std::nan("");
                long_csv += fmt::format("{},{},{},{},{}\n", g17(values[i]), s.run.seed, g17(s.final_l2),
                                        g17(s.opt_certificate), g17(ratio));
                finals.push_back(s.final_l2);
            }
            agg += fmt::format("{} {} {} {}\n", g17(values[i]), g17(quantile(finals, 0.5)), g17(quantile(finals, 0.25)),
                               g17(quantile(finals, 0.75)));
        }
        write_file(out / "sweep.csv", long_csv);
        write_file(out / "sweep.dat", agg);
        std::cout << agg;
        return static_cast<int>(kOk);
    });
}

int cmd_probe(const ExperimentConfig& cfg, const std::string& which, bool report_only, const fs::path& out) {
    return guarded([&] {
        static const std::vector<std::string> known{"sharpness", "noisy_sharpness", "landscape", "tails", "gradcheck"};
        if (std::find(known.begin(), known.end(), which) == known.end()) {
            throw ConfigError("unknown probe '" + which + "'");
        }
        if (cfg.seeds.empty()) throw ConfigError("no seeds given");
        bool all_pass = true;
        json reports = json::array();
        for (std::uint64_t seed : cfg.seeds) {
            const ResolvedRun r = resolve(cfg, seed);
            const Activation& act = r.instance.activation;
            json rep{{"seed", seed}, {"which", which}};
            bool pass = false;
            std::string detail;
            if (which == "sharpness") {
                const auto s = probe_noise_free_sharpness(r.spec, act, r.instance.wstar, cfg.n_probes, cfg.n_mc);
                pass = s.pass;
                rep["report"] = sharpness_json(s);
                detail = fmt::format("mu_bar_hat={} max_std_error={}", g17(s.mu_bar_hat), g17(s.max_std_error));
            } else if (which == "noisy_sharpness") {
                const auto nf = probe_noise_free_sharpness(r.spec, act, r.instance.wstar, cfg.n_probes, cfg.n_mc);
                const auto s = probe_noisy_sharpness(r.spec, r.instance, nf, cfg.n_probes, cfg.n_mc);
                pass = s.pass && !s.degenerate;
                rep["noise_free"] = sharpness_json(nf);
                rep["report"] = sharpness_json(s);
                detail = fmt::format("mu_bar_hat={} noise_free_mu_bar_hat={} excluded_ball_radius={}{}",
                                     g17(s.mu_bar_hat), g17(nf.mu_bar_hat), g17(s.excluded_ball_radius),
                                     s.degenerate ? " degenerate" : "");
            } else if (which == "landscape") {
                const SeedResult run = run_seed(cfg, seed);
                const auto nf = probe_noise_free_sharpness(r.spec, act, r.instance.wstar, cfg.n_probes, cfg.n_mc);
                if (!(nf.mu_bar_hat > 0.0)) throw NumericError("landscape: measured sharpness is not positive");
                const auto l = check_landscape(r.spec, r.instance, run.result.w, cfg.eps, nf.mu_bar_hat, cfg.eval_n);
                pass = l.pass;
                rep["report"] = {{"l2_hat", l.l2_hat}, {"opt_certificate", l.opt_certificate}, {"ratio", l.ratio},
                                 {"budget", l.budget}, {"mu_bar_hat", nf.mu_bar_hat}, {"pass", l.pass}};
                detail = fmt::format("ratio={} budget={}", g17(l.ratio), g17(l.budget));
            } else if (which == "tails") {
                const auto t = check_tail_facts(r.spec);
                pass = t.pass;
                json checks = json::array();
                for (const auto& c : t.checks) {
                    checks.push_back({{"what", c.what}, {"direction", c.direction}, {"r", c.r}, {"value", c.value},
                                      {"std_error", c.std_error}, {"bound", c.bound}, {"pass", c.pass}});
                    if (!c.pass) {
                        std::cout << fmt::format("  violated: {} dir={} r={} value={} bound={}\n", c.what, c.direction,
                                                 c.r, g17(c.value), g17(c.bound));
                    }
                }
                rep["report"] = {{"checks", checks}, {"pass", t.pass}};
                detail = fmt::format("checks={}", t.checks.size());
            } else {
                const auto g = gradcheck(r.spec, act);
                pass = g.pass;
                rep["report"] = {{"max_rel_error", g.max_rel_error}, {"probes", g.probes}, {"pass", g.pass}};
                detail = fmt::format("max_rel_error={}", g17(g.max_rel_error));
            }
            print_report_line(pass, which, seed, detail);
            all_pass = all_pass && pass;
            reports.push_back(rep);
        }
        fs::create_directories(out);
        write_file(out / ("probe_" + which + ".json"),
                   json{{"config", config_json(cfg)}, {"pass", all_pass}, {"reports", reports}}.dump(2) + "\n");
        return (all_pass || report_only) ? static_cast<int>(kOk) : static_cast<int>(kProbeFail);
    });
}

int main(int argc, char** argv) {
    kernels::apply_thread_budget();
    CLI::App app{"Agnostic single-neuron learner: training runs, sweeps and diagnostics"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", seeds_text, axis, values_text, which;
    bool report_only = false;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "flat key=value config file");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seeds", seeds_text, "comma-separated seeds");
        sub->allow_extras();
    };
    CLI::App* run = app.add_subcommand("run", "train per seed, write trace.csv and summary.json");
    CLI::App* sweep = app.add_subcommand("sweep", "repeat runs over one axis");
    CLI::App* probe = app.add_subcommand("probe", "run a diagnostic and print PASS/FAIL");
    common(run);
    common(sweep);
    common(probe);
    sweep->add_option("--axis", axis, "noise_level | dim | batch_size | eps")->required();
    sweep->add_option("--values", values_text, "comma-separated axis values")->required();
    probe->add_option("--which", which, "sharpness | noisy_sharpness | landscape | tails | gradcheck")->required();
    probe->add_flag("--report-only", report_only, "exit 0 regardless of the verdict");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    CLI::App* active = app.get_subcommands().front();
    ExperimentConfig cfg;
    const int parsed = guarded([&] {
        if (!config_path.empty()) load_config_file(cfg, config_path);
        const auto extras = active->remaining();
        for (std::size_t i = 0; i < extras.size(); ++i) {
            const std::string& tok = extras[i];
            if (tok.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + tok + "'");
            const std::string body = tok.substr(2);
            if (const auto eq = body.find('='); eq != std::string::npos) {
                set_key(cfg, body.substr(0, eq), body.substr(eq + 1));
            } else {
                if (i + 1 >= extras.size()) throw ConfigError("missing value for --" + body);
                set_key(cfg, body, extras[++i]);
            }
        }
        if (!seeds_text.empty()) cfg.seeds = parse_seeds(seeds_text);
        return static_cast<int>(kOk);
    });
    if (parsed != kOk) return parsed;

    if (active == run) return cmd_run(cfg, out_dir);
    if (active == sweep) {
        std::vector<double> values;
        const int rc = guarded([&] {
            values = parse_values(values_text);
            return static_cast<int>(kOk);
        });
        if (rc != kOk) return rc;
        return cmd_sweep(cfg, axis, values, out_dir);
    }
    return cmd_probe(cfg, which, report_only, out_dir);
}

}  // namespace sn::cli
