// dirtensor: batch runs of the validation grids and posterior experiments.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 numerical check
// failure, 3 too many failed replications or another runtime failure.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dirtensor/inference.hpp"
#include "dirtensor/io.hpp"
#include "dirtensor/svg.hpp"
#include "dirtensor/validation.hpp"
#include "json.hpp"

using namespace dirtensor;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0, kUsage = 1, kCheckFailed = 2, kDegraded = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::size_t jobs = 1;
    bool paper_scale = false;
    bool dry_run = false;
    double fuzz = 0.0;
};

// ---- config binding ----
//
// Each command lists its fields once; the same list drives reading a config
// file and printing the resolved config.

void read_value(const json& j, SamplerKind& v) { v = sampler_from_string(j.get<std::string>()); }
void read_value(const json& j, TopicCondition& v) { v = condition_from_string(j.get<std::string>()); }
void read_value(const json& j, std::vector<TableInstance>& v) {
    v.clear();
    for (const auto& e : j) {
        TableInstance t;
        read_value(e.at("condition"), t.condition);
        t.K0 = e.at("K0").get<std::size_t>();
        t.V = e.at("V").get<std::size_t>();
        v.push_back(t);
    }
}
template <class T>
void read_value(const json& j, T& v) {
    j.get_to(v);
}

json write_value(SamplerKind v) { return to_string(v); }
json write_value(const std::vector<TableInstance>& v) {
    json a = json::array();
    for (const auto& t : v) a.push_back({{"condition", to_string(t.condition)}, {"K0", t.K0}, {"V", t.V}});
    return a;
}
template <class T>
json write_value(const T& v) {
    return json(v);
}

struct Reader {
    const json& j;
    std::set<std::string> seen;
    template <class T>
    void operator()(const char* key, T& v) {
        seen.insert(key);
        if (!j.contains(key)) return;
        try {
            read_value(j.at(key), v);
        } catch (const std::exception& e) {
            throw UsageError(std::string("config key '") + key + "': " + e.what());
        }
    }
    void finish() const {
        for (const auto& [k, _] : j.items())
            if (!seen.count(k)) throw UsageError("unknown config key '" + k + "'");
    }
};

struct Writer {
    json out = json::object();
    template <class T>
    void operator()(const char* key, const T& v) {
        out[key] = write_value(v);
    }
};

template <class V>
void mcmc_fields(McmcOptions& o, V& v) {
    v("steps", o.steps);
    v("burn_in", o.burn_in);
    v("thin", o.thin);
    v("max_samples", o.max_samples);
    v("sampler", o.sampler);
}

template <class V>
void fields(MomentsConfig& c, std::uint64_t& seed, V& v) {
    v("seed", seed);
    v("alpha", c.alpha);
    v("x", c.x);
    v("N_max", c.N_max);
    v("m_grid", c.m_grid);
    v("replications", c.replications);
    v("pairs", c.pairs);
    v("pair_N_max", c.pair_N_max);
    v("pair_m", c.pair_m);
    v("contraction_N_max", c.contraction_N_max);
    v("fuzz", c.fuzz);
    v("jobs", c.jobs);
}

template <class V>
void fields(IdentityGridConfig& c, std::uint64_t& seed, V& v) {
    v("seed", seed);
    v("K_max", c.K_max);
    v("N_max", c.N_max);
    v("alphas_per_cell", c.alphas_per_cell);
    v("abar_min", c.abar_min);
    v("abar_max", c.abar_max);
    v("corr_K_max", c.corr_K_max);
    v("corr_V", c.corr_V);
    v("corr_N_max", c.corr_N_max);
    v("corr_abar", c.corr_abar);
    v("measures_per_cell", c.measures_per_cell);
    v("fuzz", c.fuzz);
}

template <class V>
void fields(TableConfig& c, std::uint64_t& seed, V& v) {
    v("seed", seed);
    v("instances", c.instances);
    v("abar", c.abar);
    v("both_models", c.both_models);
    v("restarts", c.probe.restarts);
    v("delta_sep", c.probe.delta_sep);
    v("lambda", c.probe.lambda);
    v("counterexample_tol", c.probe.counterexample_tol);
    v("identified_tol", c.probe.identified_tol);
    v("nm_iterations", c.probe.nm_iterations);
    v("lm_iterations", c.probe.lm_iterations);
    v("jobs", c.probe.jobs);
}

template <class V>
void fields(ContractionConfig& c, std::uint64_t& seed, V& v) {
    v("seed", seed);
    v("experiment_id", c.experiment_id);
    v("V", c.V);
    v("K_random", c.K_random);
    v("dependent_topic", c.dependent_topic);
    v("abar", c.abar);
    v("N", c.N);
    v("m_grid", c.m_grid);
    v("replications", c.replications);
    v("K_fit", c.K_fit);
    v("r", c.r);
    v("init_at_truth", c.init_at_truth);
    v("topic_floor", c.topic_floor);
    v("jobs", c.jobs);
    mcmc_fields(c.mcmc, v);
}

template <class V>
void fields(AllocationConfig& c, std::uint64_t& seed, V& v) {
    v("seed", seed);
    v("experiment_id", c.experiment_id);
    v("V", c.V);
    v("K0", c.K0);
    v("abar", c.abar);
    v("N", c.N);
    v("m_grid", c.m_grid);
    v("ntilde_grid", c.ntilde_grid);
    v("q_true", c.q_true);
    v("replications", c.replications);
    v("init_at_truth", c.init_at_truth);
    v("topic_floor", c.topic_floor);
    v("jobs", c.jobs);
    mcmc_fields(c.mcmc, v);
}

// Loads the config file (if any) into cfg, then applies flag overrides.
// --seed wins over the file; commands apply --jobs and --fuzz the same way.
template <class Cfg>
void resolve(Cfg& cfg, std::uint64_t& seed, const Common& common) {
    if (!common.config.empty()) {
        json j;
        try {
            j = json::parse(read_text_file(common.config));
        } catch (const json::exception& e) {
            throw UsageError("cannot parse " + common.config + ": " + e.what());
        } catch (const std::runtime_error& e) {
            throw UsageError(e.what());
        }
        if (!j.is_object()) throw UsageError("config must be a JSON object");
        Reader r{j, {}};
        fields(cfg, seed, r);
        r.finish();
    }
    if (common.seed) seed = *common.seed;
}

template <class Cfg>
json dump(Cfg cfg, std::uint64_t seed) {
    Writer w;
    fields(cfg, seed, w);
    return w.out;
}

fs::path out_dir(const Common& common) {
    fs::path p = common.out;
    if (p.empty()) {
        const char* env = std::getenv("DIRTENSOR_OUT");
        p = env ? env : "out";
    }
    fs::create_directories(p);
    return p;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + format_double(v[i]);
    return s;
}

std::vector<std::size_t> log_grid(double lo, double hi, double step) {
    std::vector<std::size_t> out;
    for (double e = lo; e <= hi + 1e-9; e += step) out.push_back(static_cast<std::size_t>(std::llround(std::pow(10.0, e))));
    return out;
}

// ---- commands ----

int cmd_moments(const Common& common, const CLI::App& sub) {
    MomentsConfig cfg;
    std::uint64_t seed = 1;
    if (common.paper_scale) std::cerr << "note: the default moments grid is already full size\n";
    cfg.jobs = common.jobs;
    cfg.fuzz = common.fuzz;
    resolve(cfg, seed, common);
    if (sub.count("--jobs")) cfg.jobs = common.jobs;
    if (sub.count("--fuzz")) cfg.fuzz = common.fuzz;
    if (common.dry_run) {
        std::cout << dump(cfg, seed).dump(2) << "\n";
        return kOk;
    }
    if (cfg.m_grid.empty() || cfg.N_max == 0 || cfg.replications == 0) throw UsageError("moment grid is empty");
    const auto res = moments_validation(cfg, RngStream(seed));
    const auto dir = out_dir(common);

    CsvWriter conv((dir / "moments.csv").string(), {"N", "m", "theoretical", "mean", "q25", "q75", "replications"});
    for (const auto& r : res.convergence)
        conv.field(r.N).field(r.m).field(r.theoretical).field(r.mean).field(r.q25).field(r.q75).field(cfg.replications).end_row();
    conv.close();

    CsvWriter pairs((dir / "moments_pairs.csv").string(),
                    {"pair", "N", "alpha", "x", "theoretical", "empirical", "std_error", "within_3se"});
    for (const auto& p : res.pairs)
        pairs.field(p.pair).field(p.N).field(join(p.alpha)).field(join(p.x)).field(p.theoretical)
            .field(p.empirical).field(p.std_error).field(std::string(p.within_3se() ? "1" : "0")).end_row();
    pairs.close();

    CsvWriter cross((dir / "moments_crosscheck.csv").string(), {"pair", "N", "recursive", "contracted", "pass"});
    for (const auto& c : res.cross_checks)
        cross.field(c.pair).field(c.N).field(c.recursive).field(c.contracted).field(std::string(c.pass ? "1" : "0")).end_row();
    cross.close();

    Plot conv_plot{"Linear moments against number of draws", "m", "E[(x.q)^N]", true, true, {}, {}};
    for (std::size_t N = 1; N <= cfg.N_max; ++N) {
        PlotSeries s{"N=" + std::to_string(N), {}, {}, {}, {}, true};
        double theory = 0;
        for (const auto& r : res.convergence)
            if (r.N == N) {
                s.x.push_back(static_cast<double>(r.m));
                s.y.push_back(r.mean);
                s.y_lo.push_back(r.q25);
                s.y_hi.push_back(r.q75);
                theory = r.theoretical;
            }
        conv_plot.lines.push_back({"theory N=" + std::to_string(N), s.x.front(), theory, s.x.back(), theory});
        conv_plot.series.push_back(std::move(s));
    }
    write_plot(conv_plot, (dir / "moments.svg").string(), (dir / "moments_plot.csv").string());

    Plot pair_plot{"Random pairs: recursion against Monte Carlo", "theoretical", "empirical", true, true, {}, {}};
    PlotSeries ps{"pairs", {}, {}, {}, {}, false};
    double lo = 1, hi = 0;
    for (const auto& p : res.pairs) {
        ps.x.push_back(p.theoretical);
        ps.y.push_back(p.empirical);
        if (p.theoretical > 0) lo = std::min(lo, p.theoretical);
        hi = std::max(hi, p.theoretical);
    }
    pair_plot.series.push_back(std::move(ps));
    if (hi > 0) pair_plot.lines.push_back({"y = x", lo, lo, hi, hi});
    write_plot(pair_plot, (dir / "moments_pairs.svg").string(), (dir / "moments_pairs_plot.csv").string());

    std::cout << "pairs within 3 SE: " << res.pair_coverage() * 100 << "% of " << res.pairs.size() << "\n";
    if (!res.cross_checks_pass()) {
        std::size_t shown = 0;
        for (const auto& c : res.cross_checks) {
            if (c.pass) continue;
            std::vector<double> alpha = cfg.alpha, x = cfg.x;
            if (c.pair > 0) {
                for (const auto& p : res.pairs)
                    if (p.pair == c.pair) {
                        alpha = p.alpha;
                        x = p.x;
                        break;
                    }
            }
            std::cerr << "mismatch: alpha=(" << join(alpha) << ") x=(" << join(x) << ") N=" << c.N
                      << " recursive=" << format_double(c.recursive) << " contracted=" << format_double(c.contracted)
                      << "\n";
            if (++shown == 10) break;
        }
        return kCheckFailed;
    }
    std::cout << "recursion matches tensor contraction on " << res.cross_checks.size() << " checks\n";
    return kOk;
}

int cmd_identity(const Common& common, const CLI::App& sub) {
    IdentityGridConfig cfg;
    std::uint64_t seed = 1;
    resolve(cfg, seed, common);
    if (sub.count("--fuzz")) cfg.fuzz = common.fuzz;
    if (common.dry_run) {
        std::cout << dump(cfg, seed).dump(2) << "\n";
        return kOk;
    }
    const RngStream rng(seed);
    std::vector<IdentityCell> cells = moment_identity_grid(cfg, false, rng);
    const auto inv = moment_identity_grid(cfg, true, rng);
    const auto corr = correspondence_grid(cfg, rng);
    cells.insert(cells.end(), inv.begin(), inv.end());
    cells.insert(cells.end(), corr.begin(), corr.end());

    const auto dir = out_dir(common);
    CsvWriter csv((dir / "identity.csv").string(),
                  {"check", "K", "V", "N", "abar", "trials", "max_rel_err", "max_abs_err", "max_ratio", "pass"});
    const IdentityCell* worst = nullptr;
    std::size_t failed = 0;
    for (const auto& c : cells) {
        csv.field(c.check).field(c.K).field(c.V).field(c.N).field(c.abar).field(c.trials).field(c.max_rel_err)
            .field(c.max_abs_err).field(c.max_ratio).field(std::string(c.pass() ? "1" : "0")).end_row();
        std::printf("%-17s K=%zu V=%zu N=%zu abar=%-5g max_rel_err=%.3e %s\n", c.check.c_str(), c.K, c.V, c.N,
                    c.abar, c.max_rel_err, c.pass() ? "ok" : "FAIL");
        if (!worst || c.max_ratio > worst->max_ratio) worst = &c;
        failed += !c.pass();
    }
    csv.close();
    if (failed) {
        std::fprintf(stderr, "%zu of %zu cells failed; worst: %s K=%zu V=%zu N=%zu abar=%g max_rel_err=%.3e\n", failed,
                     cells.size(), worst->check.c_str(), worst->K, worst->V, worst->N, worst->abar, worst->max_rel_err);
        return kCheckFailed;
    }
    std::printf("all %zu cells within tolerance\n", cells.size());
    return kOk;
}

int cmd_table(const Common& common, const CLI::App& sub) {
    TableConfig cfg;
    std::uint64_t seed = 1;
    cfg.probe.jobs = common.jobs;
    resolve(cfg, seed, common);
    if (sub.count("--jobs")) cfg.probe.jobs = common.jobs;
    if (common.dry_run) {
        std::cout << dump(cfg, seed).dump(2) << "\n";
        return kOk;
    }
    if (cfg.instances.empty()) throw UsageError("no table instances");
    const auto rows = identifiability_table(cfg, RngStream(seed));
    const auto dir = out_dir(common);
    CsvWriter csv((dir / "identifiability_table.csv").string(),
                  {"condition", "K0", "V", "N", "K_fit", "model", "rank", "kruskal_rank", "bound", "alt_bound",
                   "verdict", "best_objective", "witness_tv", "witness_w1"});
    for (const auto& r : rows) {
        csv.field(to_string(r.condition)).field(r.K0).field(r.V).field(r.N).field(r.K_fit).field(to_string(r.model))
            .field(r.rank).field(r.kruskal_rank).field(r.bound).field(r.alt_bound).field(to_string(r.report.verdict))
            .field(r.report.best_objective);
        if (r.report.witness) csv.field(r.report.witness_tv).field(r.report.witness_w1);
        else csv.field(std::string()).field(std::string());
        csv.end_row();
        std::printf("%-20s K0=%zu V=%zu N=%zu K=%zu %-7s bound=%zu %s%s\n", to_string(r.condition).c_str(), r.K0, r.V,
                    r.N, r.K_fit, to_string(r.model).c_str(), r.bound, to_string(r.report.verdict).c_str(),
                    r.false_counterexample() ? "  (counterexample at or above bound)" : "");
    }
    csv.close();
    return kOk;
}

int cmd_contract(const Common& common, const CLI::App& sub) {
    ContractionConfig cfg;
    std::uint64_t seed = cfg.seed;
    if (common.paper_scale) {
        cfg.V = 30;
        cfg.m_grid = log_grid(2, 4, 0.5);
        cfg.replications = 16;
    }
    cfg.jobs = common.jobs;
    resolve(cfg, seed, common);
    if (sub.count("--jobs")) cfg.jobs = common.jobs;
    cfg.seed = seed;
    if (common.dry_run) {
        std::cout << dump(cfg, seed).dump(2) << "\n";
        return kOk;
    }
    if (cfg.m_grid.empty() || cfg.replications == 0) throw UsageError("contraction grid is empty");
    const auto res = contraction_experiment(cfg);
    const auto dir = out_dir(common);
    const std::string id = cfg.experiment_id;

    CsvWriter csv((dir / (id + ".csv")).string(),
                  {"experiment_id", "m", "replication", "r", "mean_w", "q25", "q75", "n_samples", "seed"});
    for (const auto& row : res.rows) {
        csv.field(id).field(row.m).field(row.replication).field(cfg.r);
        if (row.failed) csv.field(std::string("nan")).field(std::string("nan")).field(std::string("nan")).field(std::size_t{0});
        else csv.field(row.w.mean).field(row.w.q25).field(row.w.q75).field(row.w.n);
        csv.field(row.seed).end_row();
    }
    csv.close();

    CsvWriter slope((dir / (id + "_slope.csv")).string(), {"r", "slope", "slope_se", "intercept"});
    if (res.slope) slope.field(cfg.r).field(res.slope->slope).field(res.slope->slope_se).field(res.slope->intercept).end_row();
    slope.close();

    Plot plot{"Posterior W_" + format_double(cfg.r) + " against m (K=" + std::to_string(cfg.K_fit) + ")", "m",
              "E[W_r | data]", true, true, {}, {}};
    PlotSeries s{"mean over replications", {}, {}, {}, {}, false};
    for (std::size_t gi = 0; gi < cfg.m_grid.size(); ++gi) {
        const auto& p = res.per_m[gi];
        if (p.n == 0) continue;
        s.x.push_back(static_cast<double>(cfg.m_grid[gi]));
        s.y.push_back(p.mean);
        s.y_lo.push_back(p.q25);
        s.y_hi.push_back(p.q75);
    }
    plot.series.push_back(std::move(s));
    if (res.slope)
        plot.lines.push_back(power_law_line("slope " + format_double(std::round(res.slope->slope * 1000) / 1000),
                                            res.slope->slope, res.slope->intercept,
                                            static_cast<double>(cfg.m_grid.front()),
                                            static_cast<double>(cfg.m_grid.back())));
    write_plot(plot, (dir / (id + ".svg")).string(), (dir / (id + "_plot.csv")).string());

    if (res.slope) std::printf("slope %.4f (se %.4f)\n", res.slope->slope, res.slope->slope_se);
    else std::printf("slope unavailable: fewer than 3 grid points with data\n");
    std::printf("failed replications: %zu of %zu\n", res.failures, res.rows.size());
    return 4 * res.failures > res.rows.size() ? kDegraded : kOk;
}

int cmd_allocation(const Common& common, const CLI::App& sub) {
    AllocationConfig cfg;
    std::uint64_t seed = cfg.seed;
    if (common.paper_scale) std::cerr << "note: --paper-scale does not change the allocation run\n";
    cfg.jobs = common.jobs;
    resolve(cfg, seed, common);
    if (sub.count("--jobs")) cfg.jobs = common.jobs;
    cfg.seed = seed;
    if (common.dry_run) {
        std::cout << dump(cfg, seed).dump(2) << "\n";
        return kOk;
    }
    if (cfg.m_grid.empty() || cfg.m_grid.size() != cfg.ntilde_grid.size() || cfg.replications == 0)
        throw UsageError("allocation grid is empty or m_grid and ntilde_grid differ in length");
    const auto res = allocation_experiment(cfg);
    const auto dir = out_dir(common);
    const std::string id = cfg.experiment_id;

    CsvWriter csv((dir / (id + ".csv")).string(), {"experiment_id", "m", "ntilde", "replication", "error", "seed"});
    for (const auto& row : res.rows) {
        csv.field(id).field(row.m).field(row.ntilde).field(row.replication);
        if (row.failed) csv.field(std::string("nan"));
        else csv.field(row.error);
        csv.field(row.seed).end_row();
    }
    csv.close();

    Plot plot{"Allocation error of the extra document", "m", "||q - q0||", true, true, {}, {}};
    PlotSeries s{"mean over replications", {}, {}, {}, {}, true};
    CsvWriter summary((dir / (id + "_summary.csv")).string(), {"m", "ntilde", "mean_error", "q25", "q75", "n"});
    for (std::size_t gi = 0; gi < cfg.m_grid.size(); ++gi) {
        std::vector<double> errs;
        for (const auto& row : res.rows)
            if (row.m == cfg.m_grid[gi] && row.ntilde == cfg.ntilde_grid[gi] && !row.failed) errs.push_back(row.error);
        summary.field(cfg.m_grid[gi]).field(cfg.ntilde_grid[gi]).field(res.mean_error[gi]);
        if (errs.empty()) {
            summary.field(std::string("nan")).field(std::string("nan")).field(std::size_t{0}).end_row();
            continue;
        }
        const double q25 = quantile(errs, 0.25), q75 = quantile(errs, 0.75);
        summary.field(q25).field(q75).field(errs.size()).end_row();
        s.x.push_back(static_cast<double>(cfg.m_grid[gi]));
        s.y.push_back(res.mean_error[gi]);
        s.y_lo.push_back(q25);
        s.y_hi.push_back(q75);
    }
    summary.close();
    plot.series.push_back(std::move(s));
    write_plot(plot, (dir / (id + ".svg")).string(), (dir / (id + "_plot.csv")).string());

    for (std::size_t gi = 0; gi < cfg.m_grid.size(); ++gi)
        std::printf("m=%zu ntilde=%zu mean error %.5f\n", cfg.m_grid[gi], cfg.ntilde_grid[gi], res.mean_error[gi]);
    std::printf("failed replications: %zu of %zu\n", res.failures, res.rows.size());
    return 4 * res.failures > res.rows.size() ? kDegraded : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dirichlet moment tensors, identifiability probes and posterior contraction experiments"};
    app.require_subcommand(1);
    Common common;

    struct Command {
        const char* name;
        const char* help;
        int (*run)(const Common&, const CLI::App&);
        CLI::App* app = nullptr;
    };
    std::vector<Command> commands{
        {"moments-validate", "Recursive linear moments against Monte Carlo and tensor contraction", cmd_moments},
        {"identity-check", "Decomposition and correspondence identities on a grid", cmd_identity},
        {"identifiability-table", "Probe verdicts by document length for desk-scale truths", cmd_table},
        {"contract", "Posterior contraction of the mixing measure against m", cmd_contract},
        {"allocation", "Posterior error of one document's topic proportions", cmd_allocation},
    };
    for (auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--config", common.config, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", common.seed, "Root seed");
        sub->add_option("--out", common.out, "Output directory (default $DIRTENSOR_OUT or ./out)");
        sub->add_option("--jobs", common.jobs, "Worker threads (0 = all cores)");
        sub->add_flag("--paper-scale", common.paper_scale, "Use the full-size experiment settings");
        sub->add_flag("--dry-run", common.dry_run, "Print the resolved config and exit");
        sub->add_option("--fuzz", common.fuzz, "Relative perturbation of assembled values (negative control)");
        c.app = sub;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    for (const auto& c : commands) {
        if (!c.app->parsed()) continue;
        try {
            return c.run(common, *c.app);
        } catch (const UsageError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kUsage;
        } catch (const std::invalid_argument& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kUsage;
        } catch (const std::exception& e) {
            std::cerr << "failed: " << e.what() << "\n";
            return kDegraded;
        }
    }
    return kUsage;
}
