#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qanneal/errors.hpp"
#include "qanneal/operators.hpp"
#include "qanneal/spectrum.hpp"

namespace qanneal {

struct InstanceId {
    int n = 0;
    std::uint64_t seed = 0;

    auto operator<=>(const InstanceId&) const = default;
};

// One (instance, driver) outcome. Gap statistics are absent when the
// spectrum pass was disabled; failed records keep whatever diagnostics
// were collected before the failure.
struct RunRecord {
    InstanceId id;
    DriverKind driver = DriverKind::None;
    bool failed = false;
    std::string error;
    double P = std::numeric_limits<double>::quiet_NaN();
    std::optional<GapStats> gap;
    double norm_drift = std::numeric_limits<double>::quiet_NaN();
    std::int64_t steps = 0;
    double wall_s = 0.0;
    std::string config_hash;
    std::string version;
};

// Equality of everything the experiment determines; wall time is a
// diagnostic and takes no part in determinism comparisons.
inline bool same_outcome(const RunRecord& a, const RunRecord& b) {
    const auto gap_eq = [](const std::optional<GapStats>& x, const std::optional<GapStats>& y) {
        if (x.has_value() != y.has_value()) return false;
        if (!x) return true;
        return x->min_gap == y->min_gap && x->tau_star == y->tau_star &&
               x->anticrossings == y->anticrossings;
    };
    const auto num_eq = [](double x, double y) {
        return (std::isnan(x) && std::isnan(y)) || x == y;
    };
    return a.id == b.id && a.driver == b.driver && a.failed == b.failed && a.error == b.error &&
           num_eq(a.P, b.P) && gap_eq(a.gap, b.gap) && num_eq(a.norm_drift, b.norm_drift) &&
           a.steps == b.steps && a.config_hash == b.config_hash && a.version == b.version;
}

inline nlohmann::json record_to_json(const RunRecord& r) {
    nlohmann::json j;
    j["n"] = r.id.n;
    j["seed"] = r.id.seed;
    j["driver"] = driver_label(r.driver);
    j["failed"] = r.failed;
    if (r.failed) j["error"] = r.error;
    j["P"] = std::isnan(r.P) ? nlohmann::json() : nlohmann::json(r.P);
    if (r.gap) {
        j["min_gap"] = r.gap->min_gap;
        j["tau_star"] = r.gap->tau_star;
        j["anticrossings"] = r.gap->anticrossings;
    } else {
        j["min_gap"] = nullptr;
        j["tau_star"] = nullptr;
        j["anticrossings"] = nullptr;
    }
    j["norm_drift"] = std::isnan(r.norm_drift) ? nlohmann::json() : nlohmann::json(r.norm_drift);
    j["steps"] = r.steps;
    j["wall_s"] = r.wall_s;
    j["config_hash"] = r.config_hash;
    j["version"] = r.version;
    return j;
}

inline RunRecord record_from_json(const nlohmann::json& j, const std::string& where = "record") {
    const auto fail = [&](const std::string& msg) -> RunRecord {
        throw ParseError(where + ": " + msg);
    };
    if (!j.is_object()) return fail("record is not a JSON object");
    for (const char* key : {"n", "seed", "driver", "P"})
        if (!j.contains(key)) return fail(std::string("missing field '") + key + "'");

    RunRecord r;
    r.id.n = j["n"].get<int>();
    r.id.seed = j["seed"].get<std::uint64_t>();
    r.driver = driver_from_label(j["driver"].get<std::string>());
    r.failed = j.value("failed", false);
    r.error = j.value("error", std::string{});
    r.P = j["P"].is_null() ? std::numeric_limits<double>::quiet_NaN() : j["P"].get<double>();
    if (j.contains("min_gap") && !j["min_gap"].is_null()) {
        GapStats g;
        g.min_gap = j["min_gap"].get<double>();
        g.tau_star = j.value("tau_star", 0.0);
        g.anticrossings = j.value("anticrossings", 0);
        r.gap = g;
    }
    if (j.contains("norm_drift") && !j["norm_drift"].is_null())
        r.norm_drift = j["norm_drift"].get<double>();
    r.steps = j.value("steps", std::int64_t{0});
    r.wall_s = j.value("wall_s", 0.0);
    r.config_hash = j.value("config_hash", std::string{});
    r.version = j.value("version", std::string{});
    return r;
}

// Index of a record set by (instance, driver); duplicates keep the first
// occurrence (append-only resume discipline).
class RecordTable {
public:
    explicit RecordTable(std::span<const RunRecord> records) {
        for (const auto& r : records)
            by_key_.try_emplace({r.id, r.driver}, &r);
    }

    const RunRecord* find(InstanceId id, DriverKind d) const {
        const auto it = by_key_.find({id, d});
        return it == by_key_.end() ? nullptr : it->second;
    }

    std::vector<InstanceId> instances() const {
        std::vector<InstanceId> ids;
        for (const auto& [key, rec] : by_key_)
            if (ids.empty() || ids.back() != key.first) ids.push_back(key.first);
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        return ids;
    }

private:
    std::map<std::pair<InstanceId, DriverKind>, const RunRecord*> by_key_;
};

struct AffectedSets {
    std::vector<InstanceId> F, A, M;    // sorted, pairwise disjoint
    std::size_t classified = 0;         // instances with four usable records
    std::size_t excluded_failed = 0;    // instances dropped for failed records

    const std::vector<InstanceId>& of(DriverKind d) const {
        switch (d) {
            case DriverKind::Ferro: return F;
            case DriverKind::Antiferro: return A;
            case DriverKind::Mixed: return M;
            default: throw std::invalid_argument("AffectedSets: no set for the reference driver");
        }
    }
};

// Assigns each instance to the coupled driver with the single best
// improvement over H^0: i is alpha-affected iff P^alpha > P^0 and
// P^alpha > P^alpha' for both other coupled drivers. Exact ties between
// coupled drivers go to the earlier of F > A > M; instances where no
// coupled driver strictly beats H^0 stay unassigned. A missing driver
// record raises IncompleteDataError; instances with failed records are
// excluded and counted.
inline AffectedSets classify_affected(std::span<const RunRecord> records) {
    const RecordTable table(records);
    static constexpr DriverKind all[] = {DriverKind::None, DriverKind::Ferro,
                                         DriverKind::Antiferro, DriverKind::Mixed};
    static constexpr DriverKind coupled[] = {DriverKind::Ferro, DriverKind::Antiferro,
                                             DriverKind::Mixed};

    AffectedSets sets;
    for (const InstanceId id : table.instances()) {
        bool any_failed = false;
        for (DriverKind d : all) {
            const RunRecord* r = table.find(id, d);
            if (r == nullptr)
                throw IncompleteDataError("classify_affected: instance (n=" + std::to_string(id.n) +
                                          ", seed=" + std::to_string(id.seed) +
                                          ") is missing its " + driver_label(d) + " record");
            any_failed = any_failed || r->failed;
        }
        if (any_failed) {
            ++sets.excluded_failed;
            continue;
        }
        ++sets.classified;

        const double p0 = table.find(id, DriverKind::None)->P;
        double best = -std::numeric_limits<double>::infinity();
        DriverKind best_driver = DriverKind::None;
        for (DriverKind d : coupled) {
            const double p = table.find(id, d)->P;
            if (p > best) {
                best = p;
                best_driver = d;
            }
        }
        if (best > p0) {
            switch (best_driver) {
                case DriverKind::Ferro: sets.F.push_back(id); break;
                case DriverKind::Antiferro: sets.A.push_back(id); break;
                case DriverKind::Mixed: sets.M.push_back(id); break;
                default: break;
            }
        }
    }
    return sets;
}

inline double enhancement_ratio(std::size_t l_alpha, std::size_t total) {
    if (total == 0) throw std::invalid_argument("enhancement_ratio: empty ensemble");
    return static_cast<double>(l_alpha) / static_cast<double>(total);
}

struct EnhancementValues {
    std::vector<double> values;       // P^alpha / P^0 per affected instance, id order
    std::size_t infinite_count = 0;   // P^0 = 0 cases, excluded from percentiles
};

inline EnhancementValues enhancement_values(const RecordTable& table,
                                            std::span<const InstanceId> affected,
                                            DriverKind alpha) {
    EnhancementValues out;
    out.values.reserve(affected.size());
    for (const InstanceId id : affected) {
        const RunRecord* r0 = table.find(id, DriverKind::None);
        const RunRecord* ra = table.find(id, alpha);
        if (r0 == nullptr || ra == nullptr)
            throw IncompleteDataError("enhancement_values: missing record for instance seed=" +
                                      std::to_string(id.seed));
        if (r0->P <= 0.0)
            ++out.infinite_count;
        else
            out.values.push_back(ra->P / r0->P);
    }
    return out;
}

// Nearest-rank percentile: the ceil(q/100 * m)-th order statistic,
// q an integer percent in (0, 100].
inline double percentile(std::span<const double> values, int q) {
    if (values.empty()) throw std::invalid_argument("percentile: empty value list");
    if (q < 1 || q > 100) throw std::invalid_argument("percentile: q must lie in 1..100");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    const std::size_t rank = (static_cast<std::size_t>(q) * m + 99) / 100;  // ceil(q m / 100)
    return sorted[rank - 1];
}

struct DriverStats {
    double R_en = 0.0;
    std::vector<InstanceId> affected;
    std::size_t infinite_pen = 0;
    std::optional<double> pen_p1, pen_p50, pen_p99;
    std::optional<double> median_p0, median_p;      // paired over the affected set
    std::optional<double> median_gap0, median_gap;
    std::optional<double> mean_ac0, mean_ac;
};

struct EnsembleReport {
    std::size_t L = 0;                  // classified instances
    std::size_t excluded_failed = 0;
    std::map<DriverKind, DriverStats> drivers;  // F, A, M
};

// Aggregates the full comparison: enhancement ratios, P_en percentile
// tables, and the paired medians/means of success probability, minimum
// gap and anticrossing count over each affected set.
inline EnsembleReport build_report(std::span<const RunRecord> records) {
    const RecordTable table(records);
    const AffectedSets sets = classify_affected(records);

    EnsembleReport rep;
    rep.L = sets.classified;
    rep.excluded_failed = sets.excluded_failed;

    for (DriverKind alpha : {DriverKind::Ferro, DriverKind::Antiferro, DriverKind::Mixed}) {
        DriverStats st;
        st.affected = sets.of(alpha);
        st.R_en = rep.L == 0 ? 0.0 : enhancement_ratio(st.affected.size(), rep.L);

        if (!st.affected.empty()) {
            const auto pen = enhancement_values(table, st.affected, alpha);
            st.infinite_pen = pen.infinite_count;
            if (!pen.values.empty()) {
                st.pen_p1 = percentile(pen.values, 1);
                st.pen_p50 = percentile(pen.values, 50);
                st.pen_p99 = percentile(pen.values, 99);
            }

            std::vector<double> p0s, pas, gap0s, gapas, ac0s, acas;
            for (const InstanceId id : st.affected) {
                const RunRecord* r0 = table.find(id, DriverKind::None);
                const RunRecord* ra = table.find(id, alpha);
                p0s.push_back(r0->P);
                pas.push_back(ra->P);
                if (r0->gap && ra->gap) {
                    gap0s.push_back(r0->gap->min_gap);
                    gapas.push_back(ra->gap->min_gap);
                    ac0s.push_back(r0->gap->anticrossings);
                    acas.push_back(ra->gap->anticrossings);
                }
            }
            st.median_p0 = percentile(p0s, 50);
            st.median_p = percentile(pas, 50);
            if (!gap0s.empty()) {
                st.median_gap0 = percentile(gap0s, 50);
                st.median_gap = percentile(gapas, 50);
                const auto mean = [](const std::vector<double>& v) {
                    double s = 0.0;
                    for (double x : v) s += x;
                    return s / static_cast<double>(v.size());
                };
                st.mean_ac0 = mean(ac0s);
                st.mean_ac = mean(acas);
            }
        }
        rep.drivers.emplace(alpha, std::move(st));
    }
    return rep;
}

inline nlohmann::json report_to_json(const EnsembleReport& rep) {
    nlohmann::json j;
    j["L"] = rep.L;
    j["excluded_failed"] = rep.excluded_failed;
    auto& drivers = j["drivers"] = nlohmann::json::object();
    for (const auto& [alpha, st] : rep.drivers) {
        nlohmann::json d;
        d["R_en"] = st.R_en;
        d["count"] = st.affected.size();
        d["infinite_pen"] = st.infinite_pen;
        const auto put = [&](const char* key, const std::optional<double>& v) {
            d[key] = v ? nlohmann::json(*v) : nlohmann::json();
        };
        put("pen_p1", st.pen_p1);
        put("pen_p50", st.pen_p50);
        put("pen_p99", st.pen_p99);
        put("median_p0", st.median_p0);
        put("median_p", st.median_p);
        put("median_gap0", st.median_gap0);
        put("median_gap", st.median_gap);
        put("mean_ac0", st.mean_ac0);
        put("mean_ac", st.mean_ac);
        auto& ids = d["affected"] = nlohmann::json::array();
        for (const InstanceId id : st.affected) ids.push_back({id.n, id.seed});
        drivers[driver_label(alpha)] = std::move(d);
    }
    return j;
}

// --- flat CSV exports for external plotting --------------------------------

namespace detail {

inline void csv_number(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

} // namespace detail

// One row per affected instance: the P_en histogram data.
inline void write_pen_csv(std::ostream& os, const RecordTable& table,
                          std::span<const InstanceId> affected, DriverKind alpha) {
    os << "n,seed,pen\n";
    for (const InstanceId id : affected) {
        const double p0 = table.find(id, DriverKind::None)->P;
        if (p0 <= 0.0) continue;
        os << id.n << ',' << id.seed << ',';
        detail::csv_number(os, table.find(id, alpha)->P / p0);
        os << '\n';
    }
}

// Paired initial/final scatter data; `field` selects P, min gap or
// anticrossing count.
enum class ScatterField { Probability, MinGap, Anticrossings };

inline void write_scatter_csv(std::ostream& os, const RecordTable& table,
                              std::span<const InstanceId> affected, DriverKind alpha,
                              ScatterField field) {
    switch (field) {
        case ScatterField::Probability: os << "n,seed,p0,p_alpha\n"; break;
        case ScatterField::MinGap: os << "n,seed,gap0,gap_alpha\n"; break;
        case ScatterField::Anticrossings: os << "n,seed,ac0,ac_alpha\n"; break;
    }
    for (const InstanceId id : affected) {
        const RunRecord* r0 = table.find(id, DriverKind::None);
        const RunRecord* ra = table.find(id, alpha);
        switch (field) {
            case ScatterField::Probability:
                os << id.n << ',' << id.seed << ',';
                detail::csv_number(os, r0->P);
                os << ',';
                detail::csv_number(os, ra->P);
                os << '\n';
                break;
            case ScatterField::MinGap:
                if (!r0->gap || !ra->gap) continue;
                os << id.n << ',' << id.seed << ',';
                detail::csv_number(os, r0->gap->min_gap);
                os << ',';
                detail::csv_number(os, ra->gap->min_gap);
                os << '\n';
                break;
            case ScatterField::Anticrossings:
                if (!r0->gap || !ra->gap) continue;
                os << id.n << ',' << id.seed << ',' << r0->gap->anticrossings << ','
                   << ra->gap->anticrossings << '\n';
                break;
        }
    }
}

// Per-(n, driver) summary rows across a size sweep.
inline void write_size_sweep_csv(std::ostream& os, std::span<const RunRecord> records) {
    std::map<int, std::vector<RunRecord>> by_n;
    for (const auto& r : records) by_n[r.id.n].push_back(r);

    os << "n,driver,L,R_en,count,pen_p1,pen_p50,pen_p99,median_p0,median_p,"
          "median_gap0,median_gap,mean_ac0,mean_ac,infinite_pen\n";
    const auto cell = [&](const std::optional<double>& v) {
        if (v) {
            detail::csv_number(os, *v);
        }
        os << ',';
    };
    for (const auto& [n, recs] : by_n) {
        const EnsembleReport rep = build_report(recs);
        for (const auto& [alpha, st] : rep.drivers) {
            os << n << ',' << driver_label(alpha) << ',' << rep.L << ',';
            detail::csv_number(os, st.R_en);
            os << ',' << st.affected.size() << ',';
            cell(st.pen_p1);
            cell(st.pen_p50);
            cell(st.pen_p99);
            cell(st.median_p0);
            cell(st.median_p);
            cell(st.median_gap0);
            cell(st.median_gap);
            cell(st.mean_ac0);
            cell(st.mean_ac);
            os << st.infinite_pen << '\n';
        }
    }
}

} // namespace qanneal
