// qanneal: command-line front end for the annealing toolkit.
//
// Subcommands: gen, run, spectrum, stoq-check, report, certify.
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qanneal/qanneal.hpp"

namespace fs = std::filesystem;
using namespace qanneal;

namespace {

ProblemInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open instance file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_instance(ss.str(), path);
}

Driver make_driver(DriverKind kind, int n, std::optional<std::uint64_t> mixed_seed,
                   std::uint64_t instance_seed) {
    switch (kind) {
        case DriverKind::None: return Driver::none();
        case DriverKind::Ferro: return Driver::ferro();
        case DriverKind::Antiferro: return Driver::antiferro();
        case DriverKind::Mixed:
            return Driver::mixed(n, mixed_seed ? *mixed_seed
                                               : splitmix64(instance_seed ^ kMixedSignStream));
    }
    throw std::logic_error("unreachable driver kind");
}

std::vector<double> parse_tau_list(const std::string& csv) {
    std::vector<double> taus;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) taus.push_back(std::stod(item));
    return taus;
}

std::vector<int> parse_gauge(const std::string& s, int n) {
    if (static_cast<int>(s.size()) != n)
        throw std::invalid_argument("gauge string must carry one +/- per spin");
    std::vector<int> g(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '+')
            g[i] = 1;
        else if (s[i] == '-')
            g[i] = -1;
        else
            throw std::invalid_argument("gauge string may contain only '+' and '-'");
    }
    return g;
}

void print_verdict(double tau, const std::string& gauge, const StoqVerdict& v) {
    std::cout << "tau=" << tau << " gauge=" << gauge
              << " verdict=" << (v.stoquastic ? "stoquastic" : "nonstoquastic");
    if (v.witness) {
        std::cout << " witness=(" << v.witness->row << "," << v.witness->col << ") value="
                  << v.witness->value;
    }
    std::cout << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum annealing of long-range Ising spin glasses: instance generation,\n"
                 "Schrodinger-equation dynamics, spectral gap tracking and ensemble statistics."};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    // ---- gen ---------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "Generate problem instances (JSON lines)");
    int gen_n = 0;
    std::vector<std::uint64_t> gen_seeds;
    int gen_count = 0;
    std::uint64_t gen_base = 0;
    int gen_start = 0;
    std::string gen_out = "-";
    gen->add_option("--n", gen_n, "Spin count")->required();
    gen->add_option("--seed", gen_seeds, "Explicit instance seed (repeatable)");
    gen->add_option("--count", gen_count, "Number of derived-seed instances");
    gen->add_option("--base-seed", gen_base, "Base seed for derived instances");
    gen->add_option("--start-index", gen_start, "First derived-seed index");
    gen->add_option("--out", gen_out, "Output file ('-' for stdout)");
    gen->callback([&] {
        std::vector<std::uint64_t> seeds = gen_seeds;
        for (int i = 0; i < gen_count; ++i)
            seeds.push_back(derive_seed(gen_base, gen_n, static_cast<std::uint64_t>(gen_start + i)));
        if (seeds.empty()) throw CLI::ValidationError("gen: provide --seed or --count");

        std::ofstream file;
        if (gen_out != "-") {
            file.open(gen_out);
            if (!file) throw std::runtime_error("cannot open output file " + gen_out);
        }
        std::ostream& os = gen_out == "-" ? std::cout : file;
        for (std::uint64_t s : seeds) os << serialize_instance(generate_instance(gen_n, s)) << '\n';
    });

    // ---- run ---------------------------------------------------------------
    auto* run = app.add_subcommand("run", "Run an experiment config or a single instance");
    std::string run_config, run_profile, run_instance, run_driver = "0", run_out_dir, run_trace;
    double run_lambda = 1.0, run_T = 100.0;
    std::int64_t run_steps = 0;
    int run_workers = 0, run_trace_every = 0, run_spectrum_points = 0;
    std::uint64_t run_mixed_seed = 0;
    bool run_has_mixed_seed = false;
    run->add_option("--config", run_config, "Experiment config JSON");
    run->add_option("--profile", run_profile, "Built-in config: desk (6..10 x 1000) or paper (6..17 x 10000)");
    run->add_option("--instance", run_instance, "Single instance file");
    run->add_option("--driver", run_driver, "Driver for single mode: 0, F, A or M");
    run->add_option("--lambda", run_lambda, "Intermediate-term strength");
    run->add_option("--T", run_T, "Total annealing time");
    run->add_option("--steps", run_steps, "Integrator steps (0 = auto)");
    run->add_option("--out-dir", run_out_dir, "Override the config output directory");
    run->add_option("--workers", run_workers, "Override the worker count");
    run->add_option("--mixed-seed", run_mixed_seed, "Sign seed for the M driver")
        ->each([&](const std::string&) { run_has_mixed_seed = true; });
    run->add_option("--trace", run_trace, "State-trace CSV (tau, norm, energy)");
    run->add_option("--trace-every", run_trace_every, "Trace cadence in steps");
    run->add_option("--spectrum-points", run_spectrum_points,
                    "Also trace the spectrum on this many coarse points (single mode)");
    run->callback([&] {
        const int modes = (!run_config.empty()) + (!run_profile.empty()) + (!run_instance.empty());
        if (modes != 1)
            throw CLI::ValidationError("run: provide exactly one of --config, --profile or --instance");

        if (!run_config.empty() || !run_profile.empty()) {
            ExperimentConfig cfg;
            if (!run_profile.empty()) {
                if (run_profile == "desk")
                    cfg = desk_profile();
                else if (run_profile == "paper")
                    cfg = paper_profile();
                else
                    throw CLI::ValidationError("run: unknown profile '" + run_profile + "'");
            } else {
                std::ifstream in(run_config);
                if (!in) throw std::runtime_error("cannot open config " + run_config);
                nlohmann::json j;
                in >> j;
                cfg = config_from_json(j, run_config);
            }
            if (!run_out_dir.empty()) cfg.out_dir = run_out_dir;
            if (run_workers > 0) cfg.workers = run_workers;
            if (cfg.out_dir.empty()) throw CLI::ValidationError("run: config has no out_dir");
            const RunSummary s = run_ensemble(cfg, &std::cerr);
            std::cout << "completed=" << s.completed << " skipped=" << s.skipped
                      << " failed=" << s.failed << " records=" << records_path(cfg).string() << '\n';
            return;
        }

        const ProblemInstance inst = load_instance(run_instance);
        AnnealSpec spec;
        spec.lambda = run_lambda;
        spec.T = run_T;
        spec.driver = make_driver(driver_from_label(run_driver), inst.n,
                                  run_has_mixed_seed ? std::optional<std::uint64_t>(run_mixed_seed)
                                                     : std::nullopt,
                                  inst.seed);

        std::ofstream trace_file;
        PropagateOptions opt;
        opt.steps = run_steps;
        opt.drift_policy = DriftPolicy::Flag;
        if (!run_trace.empty()) {
            trace_file.open(run_trace);
            if (!trace_file) throw std::runtime_error("cannot open trace file " + run_trace);
            trace_file << "tau,norm,energy\n";
            opt.trace_every = run_trace_every > 0 ? run_trace_every : 100;
            opt.trace_sink = [&](double tau, double norm, double energy) {
                char buf[96];
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", tau, norm, energy);
                trace_file << buf;
            };
        }

        const PropagationResult res = propagate(inst, spec, opt);
        RunRecord rec;
        rec.id = {inst.n, inst.seed};
        rec.driver = spec.driver.kind;
        rec.P = res.success_probability;
        rec.norm_drift = res.norm_drift;
        rec.steps = res.steps;
        rec.failed = !res.drift_ok;
        if (rec.failed) rec.error = "norm drift above tolerance";
        rec.version = kVersion;
        if (run_spectrum_points > 0) {
            TraceOptions topt;
            topt.coarse_points = run_spectrum_points;
            rec.gap = gap_stats(trace_spectrum(inst, spec, topt));
        }
        std::cout << record_to_json(rec).dump() << '\n';
    });

    // ---- spectrum ----------------------------------------------------------
    auto* sp = app.add_subcommand("spectrum", "Trace the instantaneous spectrum of one instance");
    std::string sp_instance, sp_driver = "0", sp_out, sp_method = "auto";
    double sp_lambda = 1.0, sp_prominence = 0.0;
    int sp_points = 201, sp_k = 2;
    std::uint64_t sp_mixed_seed = 0;
    bool sp_has_mixed_seed = false;
    sp->add_option("--instance", sp_instance, "Instance file")->required();
    sp->add_option("--driver", sp_driver, "Driver: 0, F, A or M");
    sp->add_option("--lambda", sp_lambda, "Intermediate-term strength");
    sp->add_option("--points", sp_points, "Coarse grid points");
    sp->add_option("--k", sp_k, "Levels to track");
    sp->add_option("--method", sp_method, "Eigensolver: auto, dense or lanczos");
    sp->add_option("--prominence", sp_prominence, "Anticrossing prominence threshold");
    sp->add_option("--mixed-seed", sp_mixed_seed, "Sign seed for the M driver")
        ->each([&](const std::string&) { sp_has_mixed_seed = true; });
    sp->add_option("--out", sp_out, "Trace CSV output ('-' for stdout)");
    sp->callback([&] {
        const ProblemInstance inst = load_instance(sp_instance);
        AnnealSpec spec;
        spec.lambda = sp_lambda;
        spec.driver = make_driver(driver_from_label(sp_driver), inst.n,
                                  sp_has_mixed_seed ? std::optional<std::uint64_t>(sp_mixed_seed)
                                                    : std::nullopt,
                                  inst.seed);
        TraceOptions topt;
        topt.coarse_points = sp_points;
        topt.k = sp_k;
        topt.eig.method = eig_method_from_label(sp_method);
        const SpectrumTrace trace = trace_spectrum(inst, spec, topt);

        if (!sp_out.empty()) {
            if (sp_out == "-") {
                write_trace_csv(std::cout, trace);
            } else {
                std::ofstream f(sp_out);
                if (!f) throw std::runtime_error("cannot open trace output " + sp_out);
                write_trace_csv(f, trace);
            }
        }
        if (sp_k >= 2) {
            const GapStats g = gap_stats(trace, sp_prominence);
            nlohmann::json j{{"min_gap", g.min_gap},
                             {"tau_star", g.tau_star},
                             {"anticrossings", g.anticrossings},
                             {"points", trace.points()}};
            std::cout << j.dump() << '\n';
        }
    });

    // ---- stoq-check ----------------------------------------------------------
    auto* stoq = app.add_subcommand("stoq-check", "Stoquasticity verdicts over a tau grid");
    std::string stoq_instance, stoq_driver = "0", stoq_taus, stoq_gauge;
    double stoq_lambda = 1.0;
    std::uint64_t stoq_mixed_seed = 0;
    bool stoq_has_mixed_seed = false;
    stoq->add_option("--instance", stoq_instance, "Instance file")->required();
    stoq->add_option("--driver", stoq_driver, "Driver: 0, F, A or M");
    stoq->add_option("--lambda", stoq_lambda, "Intermediate-term strength");
    stoq->add_option("--taus", stoq_taus, "Comma-separated tau list (default 0.1..0.9)");
    stoq->add_option("--gauge", stoq_gauge,
                     "Gauge as a +/- string; default checks both uniform gauges");
    stoq->add_option("--mixed-seed", stoq_mixed_seed, "Sign seed for the M driver")
        ->each([&](const std::string&) { stoq_has_mixed_seed = true; });
    stoq->callback([&] {
        const ProblemInstance inst = load_instance(stoq_instance);
        AnnealSpec spec;
        spec.lambda = stoq_lambda;
        spec.driver = make_driver(driver_from_label(stoq_driver), inst.n,
                                  stoq_has_mixed_seed ? std::optional<std::uint64_t>(stoq_mixed_seed)
                                                      : std::nullopt,
                                  inst.seed);
        std::vector<double> taus;
        if (!stoq_taus.empty()) {
            taus = parse_tau_list(stoq_taus);
        } else {
            for (int i = 1; i <= 9; ++i) taus.push_back(i / 10.0);
        }

        std::vector<std::pair<std::string, std::vector<int>>> gauges;
        if (!stoq_gauge.empty()) {
            gauges.emplace_back(stoq_gauge, parse_gauge(stoq_gauge, inst.n));
        } else {
            gauges.emplace_back(std::string(inst.n, '+'), std::vector<int>(inst.n, 1));
            gauges.emplace_back(std::string(inst.n, '-'), std::vector<int>(inst.n, -1));
        }
        for (double tau : taus)
            for (const auto& [label, gauge] : gauges)
                print_verdict(tau, label, is_stoquastic(tau, inst, spec, gauge));
    });

    // ---- report --------------------------------------------------------------
    auto* rep = app.add_subcommand("report", "Aggregate records into an ensemble report");
    std::vector<std::string> rep_records;
    std::string rep_out_dir;
    rep->add_option("--records", rep_records, "Record files or directories")->required();
    rep->add_option("--out-dir", rep_out_dir, "Report output directory")->required();
    rep->callback([&] {
        std::vector<fs::path> paths(rep_records.begin(), rep_records.end());
        const std::vector<RunRecord> records = load_records(paths);
        if (records.empty()) throw std::runtime_error("no records found");

        const EnsembleReport overall = build_report(records);
        nlohmann::json j = report_to_json(overall);
        std::map<int, std::vector<RunRecord>> by_n;
        for (const auto& r : records) by_n[r.id.n].push_back(r);
        auto& per_n = j["by_n"] = nlohmann::json::object();
        for (const auto& [n, recs] : by_n)
            per_n[std::to_string(n)] = report_to_json(build_report(recs));

        fs::create_directories(rep_out_dir);
        const fs::path dir(rep_out_dir);
        {
            std::ofstream f(dir / "report.json");
            f << j.dump(2) << '\n';
        }
        const RecordTable table(records);
        const AffectedSets sets = classify_affected(records);
        for (DriverKind alpha : {DriverKind::Ferro, DriverKind::Antiferro, DriverKind::Mixed}) {
            const std::string tag = driver_label(alpha);
            const auto& ids = sets.of(alpha);
            {
                std::ofstream f(dir / ("pen_values_" + tag + ".csv"));
                write_pen_csv(f, table, ids, alpha);
            }
            {
                std::ofstream f(dir / ("scatter_probability_" + tag + ".csv"));
                write_scatter_csv(f, table, ids, alpha, ScatterField::Probability);
            }
            {
                std::ofstream f(dir / ("scatter_min_gap_" + tag + ".csv"));
                write_scatter_csv(f, table, ids, alpha, ScatterField::MinGap);
            }
            {
                std::ofstream f(dir / ("scatter_anticrossings_" + tag + ".csv"));
                write_scatter_csv(f, table, ids, alpha, ScatterField::Anticrossings);
            }
        }
        {
            std::ofstream f(dir / "size_sweep.csv");
            write_size_sweep_csv(f, records);
        }

        std::cout << "instances=" << overall.L << " excluded_failed=" << overall.excluded_failed;
        for (const auto& [alpha, st] : overall.drivers)
            std::cout << " R_en_" << driver_label(alpha) << "=" << st.R_en;
        std::cout << '\n';
    });

    // ---- certify ---------------------------------------------------------------
    auto* cert = app.add_subcommand("certify", "Convergence study to certify the step count");
    std::string cert_instance, cert_driver = "0", cert_steps_list, cert_out;
    int cert_n = 0;
    std::uint64_t cert_seed = 0;
    double cert_lambda = 1.0, cert_T = 100.0;
    std::uint64_t cert_mixed_seed = 0;
    bool cert_has_mixed_seed = false;
    cert->add_option("--instance", cert_instance, "Instance file");
    cert->add_option("--n", cert_n, "Generate the reference instance with this size");
    cert->add_option("--seed", cert_seed, "Seed for the generated reference instance");
    cert->add_option("--driver", cert_driver, "Driver: 0, F, A or M");
    cert->add_option("--lambda", cert_lambda, "Intermediate-term strength");
    cert->add_option("--T", cert_T, "Total annealing time");
    cert->add_option("--steps-list", cert_steps_list,
                     "Comma-separated step counts (default auto x {1/4, 1/2, 1, 2})");
    cert->add_option("--mixed-seed", cert_mixed_seed, "Sign seed for the M driver")
        ->each([&](const std::string&) { cert_has_mixed_seed = true; });
    cert->add_option("--out", cert_out, "Write the certification record JSON here");
    cert->callback([&] {
        if (cert_instance.empty() && cert_n == 0)
            throw CLI::ValidationError("certify: provide --instance or --n/--seed");
        const ProblemInstance inst =
            cert_instance.empty() ? generate_instance(cert_n, cert_seed) : load_instance(cert_instance);
        AnnealSpec spec;
        spec.lambda = cert_lambda;
        spec.T = cert_T;
        spec.driver = make_driver(driver_from_label(cert_driver), inst.n,
                                  cert_has_mixed_seed ? std::optional<std::uint64_t>(cert_mixed_seed)
                                                      : std::nullopt,
                                  inst.seed);

        std::vector<std::int64_t> step_counts;
        if (!cert_steps_list.empty()) {
            std::stringstream ss(cert_steps_list);
            std::string item;
            while (std::getline(ss, item, ',')) step_counts.push_back(std::stoll(item));
        } else {
            const std::int64_t s = auto_steps(Hamiltonian(inst, spec));
            step_counts = {s / 4, s / 2, s, 2 * s};
        }

        const auto rows = convergence_study(inst, spec, step_counts);
        std::cout << "steps,P,norm_drift\n";
        for (const auto& r : rows) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g\n",
                          static_cast<long long>(r.steps), r.success_probability, r.norm_drift);
            std::cout << buf;
        }

        // certified: the smallest step count meeting the drift budget whose
        // P agrees with the finest run to 1e-6
        const double p_ref = rows.back().success_probability;
        std::int64_t certified = 0;
        for (const auto& r : rows) {
            if (r.norm_drift <= kDriftTolerance && std::abs(r.success_probability - p_ref) <= 1e-6) {
                certified = r.steps;
                break;
            }
        }
        std::cout << "certified_steps=" << certified << '\n';
        if (!cert_out.empty()) {
            nlohmann::json j;
            j["n"] = inst.n;
            j["seed"] = inst.seed;
            j["driver"] = cert_driver;
            j["T"] = cert_T;
            j["lambda"] = cert_lambda;
            j["certified_steps"] = certified;
            auto& table = j["table"] = nlohmann::json::array();
            for (const auto& r : rows)
                table.push_back({{"steps", r.steps},
                                 {"P", r.success_probability},
                                 {"norm_drift", r.norm_drift}});
            std::ofstream f(cert_out);
            if (!f) throw std::runtime_error("cannot open " + cert_out);
            f << j.dump(2) << '\n';
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
