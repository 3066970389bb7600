// lacsim: run cache-network scenarios, evaluate the single-cache models, and
// compare the two.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 compare gate failed.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lac/analytics.hpp"
#include "lac/config.hpp"
#include "lac/experiment.hpp"
#include "lac/metrics.hpp"
#include "lac/netsim.hpp"

namespace fs = std::filesystem;
using namespace lac;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitGate = 2;

std::string default_out_dir() {
    if (const char* env = std::getenv("LAC_OUT_DIR"); env && *env) return env;
    return "lac-out";
}

struct ScenarioArgs {
    std::string preset;
    std::string config;
    std::string policy;
    std::uint64_t seed = 1;
    std::uint64_t horizon = 0;  // 0 = scenario default
    double warmup = 0.0;        // fraction of the horizon excluded from per-rank counters
    double max_wall = 0.0;

    void add_to(CLI::App* cmd, double default_warmup) {
        warmup = default_warmup;
        auto* p = cmd->add_option("--preset", preset, "single, line or tree");
        auto* c = cmd->add_option("--config", config, "JSON scenario file")->check(CLI::ExistingFile);
        p->excludes(c);
        cmd->add_option("--policy", policy, "lru | lcp[:p] | sym[:p] | sym-la[:b,g] | lac[:b,g]");
        cmd->add_option("--seed", seed, "scenario seed");
        cmd->add_option("--horizon", horizon, "total user requests (default 2e5 per user population)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--warmup", warmup, "fraction of requests excluded from per-rank miss counters")
            ->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--max-wall", max_wall, "wall-clock cap in seconds (0 = none)");
    }

    ScenarioConfig build() const {
        if (preset.empty() && config.empty()) throw CLI::ValidationError("one of --preset or --config is required");
        ScenarioConfig cfg = config.empty() ? lac::preset(preset) : load_config(config);
        if (!policy.empty()) cfg = with_policy(cfg, parse_policy(policy, cfg));
        cfg.seed = seed;
        if (horizon) cfg.horizon = horizon;
        cfg.stats_from_request = static_cast<std::uint64_t>(warmup * static_cast<double>(cfg.horizon));
        cfg.max_wall_seconds = max_wall;
        cfg.validate();
        return cfg;
    }
};

void print_summary(const ScenarioConfig& cfg, const MetricsReport& r) {
    std::printf("scenario=%s policy=%s seed=%llu requests=%llu completed=%zu%s\n", cfg.name.c_str(),
                r.policy.c_str(), static_cast<unsigned long long>(r.seed),
                static_cast<unsigned long long>(r.requests_issued), r.deliveries.size(),
                r.truncated ? " (truncated by wall-clock cap)" : "");
    std::printf("mean_delivery=%.6f stddev_delivery=%.6f overall_miss=%.6f mean_decision_prob=%.6f\n",
                r.mean_delivery(), r.stddev_delivery(), r.overall_miss(), r.mean_decision_prob());
    for (std::size_t l = 0; l < r.links.size(); ++l)
        std::printf("  link %-24s rho=%.4f\n", r.links[l].id.c_str(), r.link_rho(l));
}

int cmd_sim(const ScenarioArgs& args, bool calibrate, const std::string& out) {
    auto cfg = args.build();
    if (calibrate) {
        if (cfg.policy.kind != InsertionPolicy::Kind::FixedProb || cfg.policy.symmetric())
            throw CLI::ValidationError("--calibrate-lcp requires --policy lcp");
        const double p = calibrate_lcp(cfg);
        std::printf("calibrated lcp p=%.6f from %s\n", p,
                    InsertionPolicy::latency_aware(cfg.lac_beta, cfg.lac_gamma).label().c_str());
        cfg = with_policy(cfg, InsertionPolicy::fixed_prob(p));
    }
    const auto report = run(cfg);
    print_summary(cfg, report);
    for (const auto& f : export_csv(report, out)) std::printf("wrote %s\n", f.string().c_str());
    return 0;
}

struct ModelArgs {
    std::uint32_t x = 8;
    std::uint32_t n = 20000;
    double alpha = 1.7;
    double lambda = 1.0;
    std::vector<double> mean_p{0.01, 0.1, 0.5, 1.0};
    std::uint32_t max_rank = 100;
    double eps = 0.01;
};

int cmd_model(const ModelArgs& a, const std::string& out) {
    analytics::reset_clamp_events();
    const auto model = zipf_weights(a.n, a.alpha);
    fs::create_directories(out);
    char buf[256];

    const auto rows = analytics::fig1_grid(a.x, model, a.lambda, a.mean_p, a.max_rank);
    {
        std::ofstream os(fs::path(out) / "model_asym.csv", std::ios::binary);
        analytics::write_model_csv(os, rows);
    }
    const bool heavy = a.alpha > 1.0;
    if (heavy) {
        std::ofstream os(fs::path(out) / "model_sym.csv", std::ios::binary);
        os << "rank,mean_p,pi,tau_x\n";
        for (double p : a.mean_p) {
            const double tau = analytics::tau_sym(a.x, a.lambda, model.norm_c, p, a.alpha);
            for (std::uint32_t k = 1; k <= std::min(a.max_rank, a.n); ++k) {
                std::snprintf(buf, sizeof buf, "%u,%.6g,%.9f,%.9f\n", k, p, analytics::miss_sym(k, a.x, a.alpha), tau);
                os << buf;
            }
        }
        std::ofstream eta(fs::path(out) / "eta.csv", std::ios::binary);
        eta << "mean_p,eps,tau_asym,eta_asym,eta_sym,ratio\n";
        const double es = analytics::eta_sym(a.x, a.alpha, a.eps);
        for (double p : a.mean_p) {
            const auto sol = analytics::solve_tau(a.x, a.lambda, model, p);
            const double ea = analytics::eta_asym(a.lambda, model.norm_c, sol.tau_x, p, a.eps, a.alpha);
            std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.9f,%.9f,%.9f,%.9f\n", p, a.eps, sol.tau_x, ea, es, ea / es);
            eta << buf;
        }
    } else {
        std::printf("alpha <= 1: symmetric closed forms and eta tables skipped\n");
    }
    for (double p : a.mean_p) {
        const auto sol = analytics::solve_tau(a.x, a.lambda, model, p);
        std::printf("mean_p=%-8g tau_x=%.6f residual=%.3g iterations=%d\n", p, sol.tau_x, sol.residual, sol.iterations);
    }
    std::printf("clamp_events=%llu\nwrote %s\n", static_cast<unsigned long long>(analytics::clamp_events()),
                out.c_str());
    return 0;
}

int cmd_compare(const ScenarioArgs& args, Rank ranks, double tolerance, const std::string& out) {
    const auto cfg = args.build();
    const auto report = run(cfg);
    const auto node = first_user_cache(cfg.topology);
    const auto cmp = compare_to_model(cfg, report, node, ranks);

    std::printf("node=%s policy=%s model_mean_p=%.6f tau_x=%.6f\n", cfg.topology.nodes[node].name.c_str(),
                report.policy.c_str(), cmp.model_mean_p, cmp.tau_x);
    std::printf("%6s %10s %10s %10s\n", "rank", "sim", "model", "abs_diff");
    for (const auto& d : cmp.ranks) {
        if (d.simulated)
            std::printf("%6u %10.4f %10.4f %10.4f\n", d.rank, *d.simulated, d.model, std::abs(*d.simulated - d.model));
        else
            std::printf("%6u %10s %10.4f %10s\n", d.rank, "-", d.model, "-");
    }
    std::printf("max_abs_deviation=%.4f tolerance=%.4f %s\n", cmp.max_abs_deviation, tolerance,
                cmp.gated ? "" : "(not gated: no closed form for this policy)");
    if (!out.empty()) export_csv(report, out);
    if (cmp.gated && cmp.max_abs_deviation > tolerance) {
        std::printf("FAIL\n");
        return kExitGate;
    }
    std::printf("OK\n");
    return 0;
}

int cmd_sweep(const ScenarioArgs& base, const std::string& param, const std::vector<std::string>& values,
              const std::vector<std::uint64_t>& seeds, unsigned jobs, bool per_run_csv, const std::string& out) {
    const auto base_cfg = base.build();
    std::vector<ScenarioConfig> configs;
    std::vector<std::string> labels;
    const auto seed_list = seeds.empty() ? std::vector<std::uint64_t>{base.seed} : seeds;
    for (const auto& v : values) {
        for (auto seed : seed_list) {
            auto cfg = base_cfg;
            cfg.seed = seed;
            if (param == "seed") {
                cfg.seed = std::stoull(v);
            } else if (param == "policy") {
                cfg = with_policy(cfg, parse_policy(v, cfg));
            } else if (param == "horizon") {
                cfg.horizon = std::stoull(v);
                cfg.stats_from_request = static_cast<std::uint64_t>(base.warmup * static_cast<double>(cfg.horizon));
            } else if (param == "p") {
                auto pol = cfg.policy;
                if (pol.kind != InsertionPolicy::Kind::FixedProb)
                    throw CLI::ValidationError("--param p needs a fixed-probability --policy (lcp or sym)");
                cfg = with_policy(cfg, InsertionPolicy::fixed_prob(std::stod(v), pol.mode));
            } else if (param == "beta" || param == "gamma") {
                auto pol = cfg.policy;
                if (pol.kind != InsertionPolicy::Kind::LatencyAware)
                    throw CLI::ValidationError("--param beta/gamma needs a latency-aware --policy");
                (param == "beta" ? pol.beta : pol.gamma) = std::stod(v);
                cfg = with_policy(cfg, InsertionPolicy::latency_aware(pol.beta, pol.gamma, pol.mode));
            } else {
                throw CLI::ValidationError("unknown sweep parameter '" + param + "'");
            }
            cfg.validate();
            configs.push_back(cfg);
            labels.push_back(v);
        }
    }

    const auto reports = run_many(configs, jobs);
    fs::create_directories(out);
    std::ofstream os(fs::path(out) / "sweep.csv", std::ios::binary);
    os << "# lac-metrics schema=" << kCsvSchemaVersion << " sweep=" << param << '\n';
    os << "run,param,value,seed,policy,mean_delivery,stddev_delivery,overall_miss,mean_decision_prob,repository_rho\n";
    char buf[256];
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%.6f,%.6f\n", r.mean_delivery(), r.stddev_delivery(), r.overall_miss(),
                      r.mean_decision_prob(), r.link_rho(repository_link(configs[i].topology)));
        os << i << ',' << param << ',' << csv_field(labels[i]) << ',' << r.seed << ',' << csv_field(r.policy) << buf;
        if (per_run_csv) export_csv(r, fs::path(out) / ("run_" + std::to_string(i)));
    }
    std::printf("%zu runs, wrote %s\n", reports.size(), (fs::path(out) / "sweep.csv").string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latency-aware caching simulator and model toolkit"};
    app.require_subcommand(1);
    std::string out = default_out_dir();

    ScenarioArgs sim_args;
    bool calibrate = false;
    auto* sim = app.add_subcommand("sim", "run one scenario and write CSV metrics");
    sim_args.add_to(sim, 0.0);
    sim->add_flag("--calibrate-lcp", calibrate, "run LAC first and use its mean decision probability as lcp p");
    sim->add_option("--out", out, "output directory");

    ModelArgs model_args;
    auto* model = app.add_subcommand("model", "evaluate the single-cache miss models");
    model->add_option("--x", model_args.x, "cache size in objects")->check(CLI::PositiveNumber);
    model->add_option("--N", model_args.n, "catalog size")->check(CLI::PositiveNumber);
    model->add_option("--alpha", model_args.alpha, "Zipf exponent")->check(CLI::PositiveNumber);
    model->add_option("--lambda", model_args.lambda, "request rate")->check(CLI::PositiveNumber);
    model->add_option("--mean-p", model_args.mean_p, "mean insertion probabilities")->delimiter(',');
    model->add_option("--max-rank", model_args.max_rank, "ranks written per curve")->check(CLI::PositiveNumber);
    model->add_option("--eps", model_args.eps, "miss threshold for the eta tables")->check(CLI::Range(0.0, 1.0));
    model->add_option("--out", out, "output directory");

    ScenarioArgs cmp_args;
    Rank cmp_ranks = 20;
    double tolerance = 0.05;
    std::string cmp_out;
    auto* compare = app.add_subcommand("compare", "simulate and check per-rank miss against the model");
    cmp_args.add_to(compare, 0.5);
    compare->add_option("--ranks", cmp_ranks, "ranks compared")->check(CLI::PositiveNumber);
    compare->add_option("--tolerance", tolerance, "max absolute deviation");
    compare->add_option("--out", cmp_out, "also write the simulation CSVs here");

    ScenarioArgs sweep_args;
    std::string param;
    std::vector<std::string> values;
    std::vector<std::uint64_t> seeds;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    bool per_run = false;
    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep, one summary row per run");
    sweep_args.add_to(sweep, 0.0);
    sweep->add_option("--param", param, "seed | policy | horizon | p | beta | gamma")->required();
    sweep->add_option("--values", values, "values of the swept parameter")->required();
    sweep->add_option("--seeds", seeds, "seeds crossed with every value");
    sweep->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);
    sweep->add_flag("--per-run-csv", per_run, "also write each run's CSVs into run_<i>/");
    sweep->add_option("--out", out, "output directory");

    try {
        app.parse(argc, argv);
        if (sim->parsed()) return cmd_sim(sim_args, calibrate, out);
        if (model->parsed()) return cmd_model(model_args, out);
        if (compare->parsed()) return cmd_compare(cmp_args, cmp_ranks, tolerance, cmp_out);
        if (sweep->parsed()) return cmd_sweep(sweep_args, param, values, seeds, jobs, per_run, out);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
