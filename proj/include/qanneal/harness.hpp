#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "qanneal/dynamics.hpp"
#include "qanneal/ensemble.hpp"
#include "qanneal/errors.hpp"
#include "qanneal/instance.hpp"
#include "qanneal/operators.hpp"
#include "qanneal/rng.hpp"
#include "qanneal/spectrum.hpp"
#include "qanneal/version.hpp"

namespace qanneal {

// Splittable per-run seed: three chained SplitMix64 finalizer rounds over
// (base, n, index). Distinct inputs map to distinct outputs for all
// practical ensemble sizes (collision-scanned in the tests).
inline std::uint64_t derive_seed(std::uint64_t base, int n, std::uint64_t index) {
    std::uint64_t h = splitmix64(base);
    h = splitmix64(h ^ static_cast<std::uint64_t>(n));
    h = splitmix64(h ^ index);
    return h;
}

// Reserved index stream for the shared mixed-driver sign seed, outside the
// per-instance index range.
constexpr std::uint64_t kMixedSignStream = 0x4D49584544u;  // "MIXED"

struct SpectrumSettings {
    bool enabled = true;
    int coarse_points = 201;
    int k = 2;
    double prominence = 0.0;
    EigMethod method = EigMethod::Auto;
};

inline const char* eig_method_label(EigMethod m) {
    switch (m) {
        case EigMethod::Auto: return "auto";
        case EigMethod::Dense: return "dense";
        case EigMethod::Lanczos: return "lanczos";
    }
    return "?";
}

inline EigMethod eig_method_from_label(const std::string& s) {
    if (s == "auto") return EigMethod::Auto;
    if (s == "dense") return EigMethod::Dense;
    if (s == "lanczos") return EigMethod::Lanczos;
    throw std::invalid_argument("unknown eigensolver method '" + s + "'");
}

struct ExperimentConfig {
    std::vector<int> sizes;           // n values to sweep
    int instances_per_n = 0;          // L
    std::uint64_t base_seed = 0;
    std::vector<DriverKind> drivers = {DriverKind::None, DriverKind::Ferro,
                                       DriverKind::Antiferro, DriverKind::Mixed};
    double lambda = 1.0;
    double T = 100.0;
    std::int64_t steps = 0;           // 0 -> auto-certified per (instance, driver)
    SpectrumSettings spectrum;
    std::string out_dir;
    int workers = 0;                  // 0 -> hardware concurrency
    std::string mixed_sign_mode = "shared";  // or "per-instance"

    void validate() const {
        if (sizes.empty()) throw std::invalid_argument("config: empty size list");
        for (int n : sizes)
            if (n < 1 || n > kMaxEnumerationSpins)
                throw std::invalid_argument("config: sizes must lie in 1..24");
        if (instances_per_n < 1) throw std::invalid_argument("config: instances_per_n must be >= 1");
        if (drivers.empty()) throw std::invalid_argument("config: empty driver set");
        if (!(T > 0.0)) throw std::invalid_argument("config: T must be positive");
        if (steps < 0) throw std::invalid_argument("config: steps must be >= 0");
        if (mixed_sign_mode != "shared" && mixed_sign_mode != "per-instance")
            throw std::invalid_argument("config: mixed_sign_mode must be 'shared' or 'per-instance'");
        if (spectrum.enabled) {
            if (spectrum.coarse_points < 3)
                throw std::invalid_argument("config: coarse_points must be >= 3");
            if (spectrum.k < 2) throw std::invalid_argument("config: spectrum k must be >= 2");
            if (spectrum.prominence < 0.0) throw std::invalid_argument("config: prominence must be >= 0");
        }
    }
};

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["sizes"] = c.sizes;
    j["instances_per_n"] = c.instances_per_n;
    j["base_seed"] = c.base_seed;
    auto& d = j["drivers"] = nlohmann::json::array();
    for (DriverKind k : c.drivers) d.push_back(driver_label(k));
    j["lambda"] = c.lambda;
    j["T"] = c.T;
    j["steps"] = c.steps;
    j["spectrum"] = {{"enabled", c.spectrum.enabled},
                     {"coarse_points", c.spectrum.coarse_points},
                     {"k", c.spectrum.k},
                     {"prominence", c.spectrum.prominence},
                     {"method", eig_method_label(c.spectrum.method)}};
    j["out_dir"] = c.out_dir;
    j["workers"] = c.workers;
    j["mixed_sign_mode"] = c.mixed_sign_mode;
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j, const std::string& where = "config") {
    const auto fail = [&](const std::string& msg) -> ExperimentConfig {
        throw ParseError(where + ": " + msg);
    };
    if (!j.is_object()) return fail("config is not a JSON object");
    for (const char* key : {"sizes", "instances_per_n", "base_seed"})
        if (!j.contains(key)) return fail(std::string("missing field '") + key + "'");

    ExperimentConfig c;
    c.sizes = j["sizes"].get<std::vector<int>>();
    c.instances_per_n = j["instances_per_n"].get<int>();
    c.base_seed = j["base_seed"].get<std::uint64_t>();
    if (j.contains("drivers")) {
        c.drivers.clear();
        for (const auto& s : j["drivers"]) c.drivers.push_back(driver_from_label(s.get<std::string>()));
    }
    c.lambda = j.value("lambda", 1.0);
    c.T = j.value("T", 100.0);
    c.steps = j.value("steps", std::int64_t{0});
    if (j.contains("spectrum")) {
        const auto& s = j["spectrum"];
        c.spectrum.enabled = s.value("enabled", true);
        c.spectrum.coarse_points = s.value("coarse_points", 201);
        c.spectrum.k = s.value("k", 2);
        c.spectrum.prominence = s.value("prominence", 0.0);
        c.spectrum.method = eig_method_from_label(s.value("method", std::string("auto")));
    }
    c.out_dir = j.value("out_dir", std::string{});
    c.workers = j.value("workers", 0);
    c.mixed_sign_mode = j.value("mixed_sign_mode", std::string("shared"));
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        return fail(e.what());
    }
    return c;
}

// FNV-1a over the canonical config serialization, excluding execution
// details (out_dir, workers) that do not affect the results.
inline std::string config_hash(const ExperimentConfig& c) {
    nlohmann::json j = config_to_json(c);
    j.erase("out_dir");
    j.erase("workers");
    const std::string s = j.dump();
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// The paper-scale experiment: 6..17 spins, 10000 instances per size.
inline ExperimentConfig paper_profile() {
    ExperimentConfig c;
    c.sizes = {6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17};
    c.instances_per_n = 10000;
    c.base_seed = 20170125;
    c.spectrum.method = EigMethod::Lanczos;
    c.out_dir = "paper_run";
    return c;
}

// Desk-scale profile sized for acceptance testing: 6..10 spins, 1000
// instances per size, same schedule as the paper profile.
inline ExperimentConfig desk_profile() {
    ExperimentConfig c;
    c.sizes = {6, 7, 8, 9, 10};
    c.instances_per_n = 1000;
    c.base_seed = 20170125;
    c.spectrum.method = EigMethod::Lanczos;
    c.out_dir = "desk_run";
    return c;
}

inline std::uint64_t mixed_driver_seed(const ExperimentConfig& c, int n, std::uint64_t instance_seed) {
    if (c.mixed_sign_mode == "per-instance")
        return splitmix64(instance_seed ^ kMixedSignStream);
    return derive_seed(c.base_seed, n, kMixedSignStream);
}

inline int resolve_workers(int configured) {
    if (const char* env = std::getenv("QANNEAL_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) return w;
    }
    if (configured > 0) return configured;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// One (instance, driver) unit of work: propagate, optionally trace the
// spectrum, and assemble the record. Never throws; failures come back as
// failed records.
inline RunRecord run_single(const ProblemInstance& inst, const AnnealSpec& spec,
                            const ExperimentConfig& config) {
    RunRecord rec;
    rec.id = {inst.n, inst.seed};
    rec.driver = spec.driver.kind;
    rec.config_hash = config_hash(config);
    rec.version = kVersion;

    const auto t0 = std::chrono::steady_clock::now();
    try {
        const ClassicalSolution ground = brute_force_ground(inst);

        PropagateOptions popt;
        popt.steps = config.steps;
        popt.drift_policy = DriftPolicy::Flag;
        popt.ground = &ground;
        const PropagationResult prop = propagate(inst, spec, popt);
        rec.P = prop.success_probability;
        rec.norm_drift = prop.norm_drift;
        rec.steps = prop.steps;
        if (!prop.drift_ok) {
            rec.failed = true;
            rec.error = "norm drift above tolerance";
        }

        if (config.spectrum.enabled) {
            TraceOptions topt;
            topt.coarse_points = config.spectrum.coarse_points;
            topt.k = config.spectrum.k;
            topt.eig.method = config.spectrum.method;
            const SpectrumTrace trace = trace_spectrum(inst, spec, topt);
            rec.gap = gap_stats(trace, config.spectrum.prominence);
        }
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
    }
    rec.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

inline std::filesystem::path records_path(const ExperimentConfig& config) {
    return std::filesystem::path(config.out_dir) / "records.jsonl";
}

struct RecordFileContent {
    std::vector<RunRecord> records;
    std::uintmax_t valid_bytes = 0;  // prefix ending after the last good line
    bool torn_tail = false;          // an interrupted final write was skipped
};

// Reads a JSON-lines record file. A final line that fails to parse is a
// torn append from a killed run and is skipped (and reported via
// torn_tail so the runner can truncate it); malformed content anywhere
// else is an error.
inline RecordFileContent read_record_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ParseError("cannot open record file " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();

    RecordFileContent content;
    std::size_t pos = 0, lineno = 0;
    while (pos < text.size()) {
        ++lineno;
        const std::size_t nl = text.find('\n', pos);
        const bool has_newline = nl != std::string::npos;
        const std::string line = text.substr(pos, has_newline ? nl - pos : std::string::npos);
        const std::size_t next = has_newline ? nl + 1 : text.size();
        const std::string where = file.filename().string() + ":" + std::to_string(lineno);

        if (!line.empty()) {
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded()) {
                if (next >= text.size()) {  // torn tail
                    content.torn_tail = true;
                    return content;
                }
                throw ParseError(where + ": malformed record line");
            }
            content.records.push_back(record_from_json(j, where));
        }
        pos = next;
        content.valid_bytes = pos;
    }
    return content;
}

inline std::vector<RunRecord> load_records_file(const std::filesystem::path& file) {
    return read_record_file(file).records;
}

// Loads one file or every *.jsonl under a directory (sorted), keeping the
// first record per (n, seed, driver).
inline std::vector<RunRecord> load_records(const std::vector<std::filesystem::path>& paths) {
    std::vector<std::filesystem::path> files;
    for (const auto& p : paths) {
        if (std::filesystem::is_directory(p)) {
            for (const auto& entry : std::filesystem::directory_iterator(p))
                if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
        } else {
            files.push_back(p);
        }
    }
    std::sort(files.begin(), files.end());

    std::vector<RunRecord> records;
    std::set<std::tuple<int, std::uint64_t, DriverKind>> seen;
    for (const auto& f : files)
        for (auto& r : load_records_file(f))
            if (seen.insert({r.id.n, r.id.seed, r.driver}).second)
                records.push_back(std::move(r));
    return records;
}

struct RunSummary {
    std::size_t completed = 0;  // records computed in this invocation
    std::size_t skipped = 0;    // already present (resume)
    std::size_t failed = 0;     // failed records appended in this invocation
};

// Executes every (n, instance, driver) task of a config, appending one
// JSON-lines record each. Tasks already present in the record file are
// skipped, so an interrupted run resumes where it stopped; records are
// never rewritten. Worker count does not affect record content (each
// record is a pure function of instance, driver and config), only the
// append order.
inline RunSummary run_ensemble(const ExperimentConfig& config, std::ostream* log = nullptr) {
    config.validate();
    if (config.out_dir.empty()) throw std::invalid_argument("run_ensemble: out_dir is empty");
    std::filesystem::create_directories(config.out_dir);

    const auto rec_path = records_path(config);
    std::set<std::tuple<int, std::uint64_t, DriverKind>> done;
    if (std::filesystem::exists(rec_path)) {
        const auto content = read_record_file(rec_path);
        if (content.torn_tail)  // drop the interrupted final write
            std::filesystem::resize_file(rec_path, content.valid_bytes);
        for (const auto& r : content.records)
            done.insert({r.id.n, r.id.seed, r.driver});
    }

    // persist the config alongside its records
    {
        std::ofstream cfg(std::filesystem::path(config.out_dir) / "config.json");
        cfg << config_to_json(config).dump(2) << '\n';
    }

    struct Task {
        int n;
        std::uint64_t seed;
        DriverKind driver;
    };
    std::vector<Task> tasks;
    RunSummary summary;
    for (int n : config.sizes) {
        for (int i = 0; i < config.instances_per_n; ++i) {
            const std::uint64_t seed = derive_seed(config.base_seed, n, static_cast<std::uint64_t>(i));
            for (DriverKind d : config.drivers) {
                if (done.count({n, seed, d}))
                    ++summary.skipped;
                else
                    tasks.push_back({n, seed, d});
            }
        }
    }

    std::ofstream out(rec_path, std::ios::app);
    if (!out) throw std::runtime_error("run_ensemble: cannot open " + rec_path.string());

    std::mutex io_mutex;
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> n_failed{0};
    std::atomic<std::size_t> n_done{0};

    const int workers = resolve_workers(config.workers);
    const auto worker = [&] {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= tasks.size()) return;
            const Task& t = tasks[idx];

            const ProblemInstance inst = generate_instance(t.n, t.seed);
            AnnealSpec spec;
            spec.lambda = config.lambda;
            spec.T = config.T;
            switch (t.driver) {
                case DriverKind::None: spec.driver = Driver::none(); break;
                case DriverKind::Ferro: spec.driver = Driver::ferro(); break;
                case DriverKind::Antiferro: spec.driver = Driver::antiferro(); break;
                case DriverKind::Mixed:
                    spec.driver = Driver::mixed(t.n, mixed_driver_seed(config, t.n, t.seed));
                    break;
            }
            const RunRecord rec = run_single(inst, spec, config);
            if (rec.failed) n_failed.fetch_add(1);

            std::lock_guard<std::mutex> lock(io_mutex);
            out << record_to_json(rec).dump() << '\n';
            out.flush();
            const std::size_t k = n_done.fetch_add(1) + 1;
            if (log != nullptr && (k % 50 == 0 || k == tasks.size()))
                *log << "[" << k << "/" << tasks.size() << "] n=" << t.n << " driver="
                     << driver_label(t.driver) << " wall=" << rec.wall_s << "s" << std::endl;
        }
    };

    std::vector<std::thread> pool;
    const int nthreads = std::min<std::size_t>(workers, std::max<std::size_t>(tasks.size(), 1));
    pool.reserve(nthreads);
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    summary.completed = tasks.size();
    summary.failed = n_failed.load();
    return summary;
}

// CSV trace export: tau, E0..E_{k-1} per row.
inline void write_trace_csv(std::ostream& os, const SpectrumTrace& trace) {
    os << "tau";
    for (int l = 0; l < trace.k; ++l) os << ",E" << l;
    os << '\n';
    char buf[32];
    for (std::size_t i = 0; i < trace.points(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", trace.taus[i]);
        os << buf;
        for (int l = 0; l < trace.k; ++l) {
            std::snprintf(buf, sizeof buf, "%.17g", trace.energy(i, l));
            os << ',' << buf;
        }
        os << '\n';
    }
}

} // namespace qanneal
