#pragma once

// Command-line front end. run_cli() holds all of the logic so that tests can
// drive it in-process; gwqs_main.cpp only forwards argv.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gwqs/kernel.hpp"
#include "gwqs/quasispecies.hpp"
#include "gwqs/simulate.hpp"
#include "gwqs/spectral.hpp"

#ifndef GWQS_VERSION
#define GWQS_VERSION "dev"
#endif

namespace gwqs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitUsage = 2;

struct Options {
    double sigma = 4.0;
    std::size_t ell = 100;
    std::size_t kappa = 2;
    std::optional<double> q;
    std::optional<double> a;
    std::uint64_t seed = 1;
    std::string out;
    std::string format = "csv";
    std::optional<double> tol;
    std::optional<long> max_iter;
    std::size_t report_k = 10;
    std::vector<std::size_t> ell_grid{100, 300, 1000};
    std::optional<std::size_t> n_gens;
    std::size_t replicas = 200;
    double pop_cap = static_cast<double>(kDefaultPopCap);
    double z0 = 100;
    std::size_t start_class = 0;
    unsigned threads = 1;
    std::string mode = "frequencies";
    std::size_t mc = 0;
    bool no_timing = false;
};

using Cell = std::variant<std::monostate, std::int64_t, double, std::string, bool>;
using Fields = std::vector<std::pair<std::string, Cell>>;

struct Report {
    std::string command;
    Fields config;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    Fields diagnostics;
    std::vector<std::string> notices;
    bool ok = true;
};

inline Cell cell(std::size_t v) { return static_cast<std::int64_t>(v); }
inline Cell cell(long v) { return static_cast<std::int64_t>(v); }
inline Cell cell(double v) { return v; }
inline Cell cell(bool v) { return v; }
inline Cell cell(std::string v) { return v; }

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string to_text(const Cell& c) {
    struct Visitor {
        std::string operator()(std::monostate) const { return ""; }
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(double v) const { return format_double(v); }
        std::string operator()(const std::string& v) const { return v; }
        std::string operator()(bool v) const { return v ? "true" : "false"; }
    };
    return std::visit(Visitor{}, c);
}

inline nlohmann::ordered_json to_json(const Cell& c) {
    struct Visitor {
        nlohmann::ordered_json operator()(std::monostate) const { return nullptr; }
        nlohmann::ordered_json operator()(std::int64_t v) const { return v; }
        nlohmann::ordered_json operator()(double v) const {
            if (!std::isfinite(v)) return format_double(v);
            return v;
        }
        nlohmann::ordered_json operator()(const std::string& v) const { return v; }
        nlohmann::ordered_json operator()(bool v) const { return v; }
    };
    return std::visit(Visitor{}, c);
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char ch : s) {
        if (ch == '"') quoted += '"';
        quoted += ch;
    }
    return quoted + "\"";
}

inline void write_csv(const Report& r, std::optional<double> seconds, std::ostream& os) {
    os << "# gwqs " << GWQS_VERSION << '\n';
    os << "# command: " << r.command << '\n';
    for (const auto& [k, v] : r.config) os << "# config " << k << '=' << to_text(v) << '\n';
    for (const auto& [k, v] : r.diagnostics) os << "# diagnostic " << k << '=' << to_text(v) << '\n';
    for (const auto& n : r.notices) os << "# notice: " << n << '\n';
    os << "# duration_seconds=" << (seconds ? format_double(*seconds) : std::string("omitted")) << '\n';
    for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? "," : "") << csv_field(r.columns[i]);
    os << '\n';
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_field(to_text(row[i]));
        os << '\n';
    }
}

inline void write_json(const Report& r, std::optional<double> seconds, std::ostream& os) {
    nlohmann::ordered_json doc;
    auto& config = doc["config"];
    config["command"] = r.command;
    config["version"] = GWQS_VERSION;
    for (const auto& [k, v] : r.config) config[k] = to_json(v);
    auto results = nlohmann::ordered_json::array();
    for (const auto& row : r.rows) {
        nlohmann::ordered_json obj;
        for (std::size_t i = 0; i < row.size(); ++i) obj[r.columns[i]] = to_json(row[i]);
        results.push_back(std::move(obj));
    }
    doc["results"] = std::move(results);
    auto& diag = doc["diagnostics"];
    for (const auto& [k, v] : r.diagnostics) diag[k] = to_json(v);
    diag["notices"] = r.notices;
    diag["ok"] = r.ok;
    if (seconds)
        diag["duration_seconds"] = *seconds;
    else
        diag["duration_seconds"] = "omitted";
    os << doc.dump(2) << '\n';
}

// Model parameters: --a sets q = a / ell; with neither --a nor --q, q = 0.01.
inline ModelParams model_params(const Options& o, std::size_t ell) {
    if (o.a) return ModelParams::with_a(o.sigma, ell, o.kappa, *o.a);
    return ModelParams::make(o.sigma, ell, o.kappa, o.q.value_or(0.01));
}

inline double resolved_a(const Options& o) { return o.a ? *o.a : static_cast<double>(o.ell) * o.q.value_or(0.01); }

inline Fields common_config(const Options& o) {
    Fields f{{"sigma", cell(o.sigma)}, {"ell", cell(o.ell)}, {"kappa", cell(o.kappa)}};
    if (o.a)
        f.emplace_back("a", cell(*o.a));
    else
        f.emplace_back("q", cell(o.q.value_or(0.01)));
    f.emplace_back("report_k", cell(o.report_k));
    return f;
}

inline Report cmd_kernel(const Options& o) {
    const auto p = model_params(o, o.ell);
    const auto kernel = lumped_kernel_matrix(p);
    Report r;
    r.command = "kernel";
    r.config = common_config(o);
    r.columns.push_back("b");
    for (std::size_t c = 0; c <= p.ell; ++c) r.columns.push_back("c" + std::to_string(c));
    r.columns.push_back("row_sum_deviation");
    for (std::size_t b = 0; b <= p.ell; ++b) {
        std::vector<Cell> row{cell(b)};
        for (std::size_t c = 0; c <= p.ell; ++c) row.push_back(cell(kernel(b, c)));
        row.push_back(cell(kernel.row_deviation(b)));
        r.rows.push_back(std::move(row));
    }
    const double worst = kernel.max_row_deviation();
    r.diagnostics = {{"q", cell(p.q)}, {"max_row_sum_deviation", cell(worst)}, {"stochastic", cell(worst < 1e-10)}};
    r.ok = worst < 1e-10;
    return r;
}

inline Report cmd_perron(const Options& o) {
    const auto p = model_params(o, o.ell);
    const auto kernel = lumped_kernel_matrix(p);
    const double tol = o.tol.value_or(kPerronTol);
    const long max_iter = o.max_iter.value_or(kPerronMaxIter);
    const auto pair = perron(mean_matrix(p, kernel), tol, max_iter);
    const auto bounds = perron_bounds_check(pair, p, kernel, o.report_k);
    Report r;
    r.command = "perron";
    r.config = common_config(o);
    r.config.emplace_back("tol", cell(tol));
    r.config.emplace_back("max_iter", cell(max_iter));
    r.columns = {"k", "rho", "bound_lower", "lambda_rho", "bound_upper", "bound_ok"};
    for (const auto& b : bounds.bounds)
        r.rows.push_back({cell(b.k), cell(pair.rho[b.k]), cell(b.lower), cell(b.middle), cell(b.upper),
                          cell(b.lower_ok && b.upper_ok)});
    const double gap = std::fabs(pair.lambda - ((p.sigma - 1.0) * pair.rho[0] + 1.0));
    r.diagnostics = {{"q", cell(p.q)},
                     {"lambda", cell(pair.lambda)},
                     {"residual", cell(pair.residual)},
                     {"iterations", cell(pair.iterations)},
                     {"identity_gap", cell(gap)},
                     {"bounds_pass", cell(bounds.all_pass())}};
    r.ok = bounds.all_pass();
    if (!r.ok) r.notices.push_back("sandwich bounds violated for at least one class");
    return r;
}

inline Report cmd_quasispecies(const Options& o) {
    const auto qp = QuasispeciesParams::make(o.sigma, resolved_a(o));
    const Regime regime = classify_regime(qp);
    Report r;
    r.command = "quasispecies";
    r.config = {{"sigma", cell(qp.sigma)}, {"a", cell(qp.a)}, {"report_k", cell(o.report_k)}};
    r.columns = {"k", "closed_form", "recurrence", "abs_difference", "running_sum"};
    const std::size_t K = o.report_k;
    std::vector<double> rec(K + 1, 0.0);
    double tail = 0.0;
    if (regime == Regime::Quasispecies) {
        const auto pmf = qs_pmf_by_recurrence(qp, K);
        rec = pmf.probs;
        tail = pmf.tail_bound;
    } else {
        r.notices.push_back("disordered regime (sigma * exp(-a) <= 1): the limiting pmf is identically zero");
    }
    double running = 0.0, worst = 0.0;
    for (std::size_t k = 0; k <= K; ++k) {
        const double closed = qs_pmf(qp, k);
        running += closed;
        worst = std::max(worst, std::fabs(closed - rec[k]));
        r.rows.push_back({cell(k), cell(closed), cell(rec[k]), cell(std::fabs(closed - rec[k])), cell(running)});
    }
    r.diagnostics = {{"regime", cell(std::string(to_string(regime)))},
                     {"threshold", cell(qp.threshold())},
                     {"max_abs_difference", cell(worst)},
                     {"tail_bound", cell(tail)}};
    return r;
}

inline Report cmd_converge(const Options& o) {
    if (o.ell_grid.empty()) throw UsageError("converge: --ell-grid is empty");
    const double a = resolved_a(o);
    const auto qp = QuasispeciesParams::make(o.sigma, a);
    const double lambda_limit = limit_eigenvalue(qp);
    const double tol = o.tol.value_or(kPerronTol);
    const long max_iter = o.max_iter.value_or(kPerronMaxIter);
    Report r;
    r.command = "converge";
    r.config = {{"sigma", cell(o.sigma)}, {"a", cell(a)}, {"kappa", cell(o.kappa)}, {"report_k", cell(o.report_k)}};
    std::string grid;
    for (auto l : o.ell_grid) grid += (grid.empty() ? "" : ";") + std::to_string(l);
    r.config.emplace_back("ell_grid", cell(grid));
    r.config.emplace_back("tol", cell(tol));
    r.config.emplace_back("max_iter", cell(max_iter));
    r.columns = {"ell", "q", "lambda", "lambda_gap"};
    for (std::size_t k = 0; k <= o.report_k; ++k) r.columns.push_back("gap" + std::to_string(k));
    r.columns.push_back("max_gap");

    std::vector<double> max_gaps, lambda_gaps;
    for (std::size_t ell : o.ell_grid) {
        const auto p = ModelParams::with_a(o.sigma, ell, o.kappa, a);
        const auto pair = perron(mean_matrix(p), tol, max_iter);
        std::vector<Cell> row{cell(ell), cell(p.q), cell(pair.lambda), cell(std::fabs(pair.lambda - lambda_limit))};
        double worst = 0.0;
        for (std::size_t k = 0; k <= o.report_k; ++k) {
            const double rho = k <= ell ? pair.rho[k] : 0.0;
            const double g = std::fabs(rho - qs_pmf(qp, k));
            worst = std::max(worst, g);
            row.push_back(cell(g));
        }
        row.push_back(cell(worst));
        max_gaps.push_back(worst);
        lambda_gaps.push_back(std::fabs(pair.lambda - lambda_limit));
        r.rows.push_back(std::move(row));
    }
    bool gap_down = true, lambda_down = true;
    for (std::size_t i = 1; i < max_gaps.size(); ++i) {
        gap_down = gap_down && max_gaps[i] < max_gaps[i - 1];
        lambda_down = lambda_down && lambda_gaps[i] < lambda_gaps[i - 1];
    }
    r.diagnostics = {{"regime", cell(std::string(to_string(classify_regime(qp))))},
                     {"lambda_limit", cell(lambda_limit)},
                     {"max_gap_decreasing", cell(gap_down)},
                     {"lambda_gap_decreasing", cell(lambda_down)}};
    return r;
}

inline std::uint64_t count_option(double v, const char* name) {
    if (!(v >= 0.0) || v > 1.8e19 || v != std::floor(v))
        throw UsageError(std::string(name) + " must be a nonnegative integer");
    return static_cast<std::uint64_t>(v);
}

inline Report cmd_simulate(const Options& o) {
    const auto p = model_params(o, o.ell);
    if (o.start_class > p.ell) throw UsageError("--start-class exceeds ell");
    const std::uint64_t pop_cap = count_option(o.pop_cap, "--pop-cap");
    const auto z0 = OccupancyVector::single(p.classes(), o.start_class, count_option(o.z0, "--z0"));
    const std::size_t n_gens = o.n_gens.value_or(12);
    const std::size_t kmax = std::min(o.report_k, p.ell);
    Report r;
    r.command = "simulate";
    r.config = common_config(o);
    for (auto&& f : Fields{{"mode", cell(o.mode)},
                           {"seed", cell(static_cast<std::int64_t>(o.seed))},
                           {"z0", cell(static_cast<std::int64_t>(z0.total()))},
                           {"start_class", cell(o.start_class)},
                           {"n_gens", cell(n_gens)},
                           {"pop_cap", cell(static_cast<std::int64_t>(pop_cap))}})
        r.config.push_back(std::move(f));

    if (o.mode == "trajectory") {
        RandomStream rng(o.seed, 0);
        const auto t = run_trajectory(z0, p, n_gens, pop_cap, rng);
        r.columns = {"generation", "total"};
        for (std::size_t k = 0; k <= kmax; ++k) r.columns.push_back("freq" + std::to_string(k));
        for (const auto& rec : t.records) {
            std::vector<Cell> row{cell(rec.generation), cell(static_cast<std::int64_t>(rec.total))};
            const auto f = rec.state.frequencies();
            for (std::size_t k = 0; k <= kmax; ++k) row.push_back(cell(f[k]));
            r.rows.push_back(std::move(row));
        }
        r.diagnostics = {{"generations", cell(t.records.size() - 1)},
                         {"extinct", cell(t.extinct)},
                         {"capped", cell(t.capped)}};
        if (t.extinct) {
            r.notices.push_back("population went extinct at generation " + std::to_string(t.records.size() - 1));
            r.ok = false;
        }
        return r;
    }

    r.config.emplace_back("replicas", cell(o.replicas));
    r.config.emplace_back("threads", cell(static_cast<std::size_t>(o.threads)));
    const auto est = conditioned_frequencies(p, z0, n_gens, o.replicas, pop_cap, RngSpec{o.seed, 0}, o.threads);
    const auto pair = perron(mean_matrix(p));
    r.columns = {"k", "mean", "standard_error", "perron_rho"};
    for (std::size_t k = 0; k <= kmax; ++k)
        r.rows.push_back({cell(k), cell(est.mean[k]), cell(est.standard_error[k]), cell(pair.rho[k])});
    r.diagnostics = {{"survivors", cell(est.survivors)},
                     {"replicas", cell(est.replicas)},
                     {"capped", cell(est.capped)},
                     {"lambda", cell(pair.lambda)}};
    return r;
}

inline Report cmd_extinction(const Options& o) {
    const auto p = model_params(o, o.ell);
    const auto kernel = lumped_kernel_matrix(p);
    const double tol = o.tol.value_or(kExtinctionTol);
    const long max_iter = o.max_iter.value_or(kExtinctionMaxIter);
    const auto ext = extinction_probabilities(p, kernel, tol, max_iter);
    const std::size_t n_gens = o.n_gens.value_or(200);
    const std::uint64_t pop_cap = count_option(o.pop_cap, "--pop-cap");
    Report r;
    r.command = "extinction";
    r.config = common_config(o);
    r.config.emplace_back("tol", cell(tol));
    r.config.emplace_back("max_iter", cell(max_iter));
    r.config.emplace_back("mc", cell(o.mc));
    if (o.mc > 0) {
        r.config.emplace_back("seed", cell(static_cast<std::int64_t>(o.seed)));
        r.config.emplace_back("n_gens", cell(n_gens));
        r.config.emplace_back("pop_cap", cell(static_cast<std::int64_t>(pop_cap)));
        r.config.emplace_back("threads", cell(static_cast<std::size_t>(o.threads)));
    }
    r.columns = {"k", "extinction"};
    if (o.mc > 0) r.columns.insert(r.columns.end(), {"mc_frequency", "mc_standard_error", "mc_within_3se"});
    for (std::size_t k = 0; k <= p.ell; ++k) {
        std::vector<Cell> row{cell(k), cell(ext.probs[k])};
        if (o.mc > 0) {
            if (k <= o.report_k) {
                // separate stream block per starting class
                const RngSpec spec{o.seed, static_cast<std::uint64_t>(k) * o.mc};
                const auto mc = extinction_frequency(p, k, o.mc, n_gens, pop_cap, spec, o.threads);
                row.push_back(cell(mc.frequency));
                row.push_back(cell(mc.standard_error));
                row.push_back(cell(std::fabs(mc.frequency - ext.probs[k]) <= 3.0 * mc.standard_error));
            } else {
                row.insert(row.end(), {Cell{}, Cell{}, Cell{}});
            }
        }
        r.rows.push_back(std::move(row));
    }
    r.diagnostics = {{"q", cell(p.q)}, {"iterations", cell(ext.iterations)}, {"last_step", cell(ext.last_step)}};
    return r;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    const auto started = std::chrono::steady_clock::now();
    Options o;
    CLI::App app{"Sharp-peak Galton-Watson quasispecies toolkit"};
    app.set_version_flag("--version", GWQS_VERSION);
    app.set_config("--config", "", "Read flat key=value settings from a file; flags override it");
    app.fallthrough();
    app.require_subcommand(1);

    app.add_option("--sigma", o.sigma, "Master-sequence fitness (>= 1)")->capture_default_str();
    app.add_option("--ell", o.ell, "Sequence length")->capture_default_str();
    app.add_option("--kappa", o.kappa, "Alphabet size (>= 2)")->capture_default_str();
    auto* q_opt = app.add_option("--q", o.q, "Per-locus mutation probability (default 0.01)");
    app.add_option("--a", o.a, "Mean mutations per genome; sets q = a / ell")->excludes(q_opt);
    app.add_option("--seed", o.seed, "Master random seed")->capture_default_str();
    app.add_option("--out", o.out, "Output file (default stdout)");
    app.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    app.add_option("--tol", o.tol, "Convergence tolerance");
    app.add_option("--max-iter", o.max_iter, "Iteration limit");
    app.add_option("--report-k", o.report_k, "Largest class reported")->capture_default_str();
    app.add_option("--ell-grid", o.ell_grid, "Comma-separated sequence lengths (converge)")->delimiter(',');
    app.add_option("--n-gens", o.n_gens, "Generations to simulate (simulate: 12, extinction: 200)");
    app.add_option("--replicas", o.replicas, "Independent replicas (simulate)")->capture_default_str();
    app.add_option("--pop-cap", o.pop_cap, "Stop a run once its population exceeds this")->capture_default_str();
    app.add_option("--z0", o.z0, "Initial individuals (simulate)")->capture_default_str();
    app.add_option("--start-class", o.start_class, "Hamming class of the initial individuals")->capture_default_str();
    app.add_option("--threads", o.threads, "Worker threads for replicas")->capture_default_str();
    app.add_option("--mode", o.mode, "simulate output")
        ->check(CLI::IsMember({"trajectory", "frequencies"}))
        ->capture_default_str();
    app.add_option("--mc", o.mc, "Monte Carlo replicas per starting class (extinction)");
    app.add_flag("--no-timing", o.no_timing, "Omit the wall-clock duration so repeated runs are byte-identical");

    struct Command {
        const char* name;
        const char* help;
        Report (*run)(const Options&);
    };
    const Command commands[] = {
        {"kernel", "Lumped mutation kernel between Hamming classes", cmd_kernel},
        {"perron", "Perron eigenpair of the mean matrix with bound checks", cmd_perron},
        {"quasispecies", "Limiting quasispecies distribution", cmd_quasispecies},
        {"converge", "Perron vector against the limit over a grid of sequence lengths", cmd_converge},
        {"simulate", "Occupancy-process simulation", cmd_simulate},
        {"extinction", "Extinction probabilities, optionally with Monte Carlo", cmd_extinction},
    };
    for (const auto& c : commands) app.add_subcommand(c.name, c.help);

    std::vector<std::string> argv_store{"gwqs"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_store) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const Command* chosen = nullptr;
    for (const auto& c : commands)
        if (app.got_subcommand(c.name)) chosen = &c;

    Report report;
    try {
        report = chosen->run(o);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailed;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailed;
    }
    for (const auto& n : report.notices) err << "notice: " << n << '\n';

    std::optional<double> seconds;
    if (!o.no_timing)
        seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    report.config.emplace_back("format", cell(o.format));
    report.config.emplace_back("no_timing", cell(o.no_timing));

    std::ofstream file;
    std::ostream* sink = &out;
    if (!o.out.empty()) {
        file.open(o.out, std::ios::binary);
        if (!file) {
            err << "error: cannot open " << o.out << " for writing\n";
            return kExitUsage;
        }
        sink = &file;
    }
    if (o.format == "json")
        write_json(report, seconds, *sink);
    else
        write_csv(report, seconds, *sink);
    sink->flush();
    if (!*sink) {
        err << "error: failed writing output\n";
        return kExitFailed;
    }
    return report.ok ? kExitOk : kExitFailed;
}

}  // namespace gwqs::cli
