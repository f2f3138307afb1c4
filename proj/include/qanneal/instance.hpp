#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qanneal/errors.hpp"
#include "qanneal/rng.hpp"

namespace qanneal {

// Couplings of a fully connected n-spin graph are stored packed in
// lexicographic (i,j) order, i < j: (0,1), (0,2), ..., (n-2,n-1).
inline std::size_t pair_count(int n) {
    return static_cast<std::size_t>(n) * (n - 1) / 2;
}

inline std::size_t pair_index(int n, int i, int j) {
    return static_cast<std::size_t>(i) * n - static_cast<std::size_t>(i) * (i + 1) / 2
         + static_cast<std::size_t>(j - i - 1);
}

// Basis-state encoding: bit i of a configuration word holds spin i, with
// sigma^z eigenvalue +1 stored as bit 0 and -1 as bit 1.
inline double spin_of(std::uint64_t config, int i) {
    return 1.0 - 2.0 * static_cast<double>((config >> i) & 1u);
}

// One disorder realization of the long-range Ising problem
//   H_P = sum_{i<j} J_ij sz_i sz_j + sum_i h_i sz_i
// with all J_ij and h_i i.i.d. N(0,1).
struct ProblemInstance {
    int n = 0;
    std::uint64_t seed = 0;
    std::vector<double> fields;     // h_i, size n
    std::vector<double> couplings;  // J_ij packed, size n(n-1)/2

    double coupling(int i, int j) const { return couplings[pair_index(n, i, j)]; }

    bool operator==(const ProblemInstance&) const = default;
};

// Ground-state data of the classical cost, including degenerate ties.
struct ClassicalSolution {
    double energy = 0.0;
    std::vector<std::uint64_t> states;  // sorted ascending
    int degeneracy = 0;                 // == states.size()
};

constexpr int kMaxSpinCount = 32;        // instance container limit
constexpr int kMaxEnumerationSpins = 24; // 2^24 brute-force budget

// Draw order is fixed: h_0..h_{n-1}, then J_ij in lexicographic (i,j)
// order, one GaussianStream value each. Deterministic in (n, seed).
inline ProblemInstance generate_instance(int n, std::uint64_t seed) {
    if (n < 1)
        throw std::invalid_argument("generate_instance: spin count must be >= 1");
    if (n > kMaxSpinCount)
        throw std::invalid_argument("generate_instance: spin count above supported range");

    ProblemInstance inst;
    inst.n = n;
    inst.seed = seed;
    inst.fields.resize(static_cast<std::size_t>(n));
    inst.couplings.resize(pair_count(n));

    GaussianStream g(seed);
    for (auto& h : inst.fields) h = g.next();
    for (auto& J : inst.couplings) J = g.next();
    return inst;
}

// Classical cost of one configuration: sum_{i<j} J_ij s_i s_j + sum_i h_i s_i.
// This is the canonical evaluation; the quantum diagonal is filled with the
// same function so the two agree bit-for-bit.
inline double classical_energy(const ProblemInstance& inst, std::uint64_t config) {
    if (inst.n < 64 && (config >> inst.n) != 0)
        throw std::invalid_argument("classical_energy: configuration has more bits than spins");

    double e = 0.0;
    std::size_t p = 0;
    for (int i = 0; i < inst.n; ++i) {
        const double si = spin_of(config, i);
        for (int j = i + 1; j < inst.n; ++j, ++p)
            e += inst.couplings[p] * si * spin_of(config, j);
    }
    for (int i = 0; i < inst.n; ++i)
        e += inst.fields[i] * spin_of(config, i);
    return e;
}

// Exhaustive ground-state search over all 2^n configurations.
//
// The scan walks the Gray-code sequence with O(n) incremental energy
// updates; candidate states near the scan minimum are then re-evaluated
// with classical_energy so the reported energies carry no accumulated
// rounding. States within tol*max(1,|E_min|) of the exact minimum are
// listed as degenerate.
inline ClassicalSolution brute_force_ground(const ProblemInstance& inst, double tol = 1e-12) {
    const int n = inst.n;
    if (n < 1) throw std::invalid_argument("brute_force_ground: empty instance");
    if (n > kMaxEnumerationSpins)
        throw CapacityError("brute_force_ground: n = " + std::to_string(n) +
                            " exceeds the 2^24 enumeration budget");

    const std::uint64_t dim = std::uint64_t{1} << n;

    // Incremental scan: s starts at configuration 0 (all spins +1).
    std::vector<double> s(static_cast<std::size_t>(n), 1.0);
    double e = 0.0;
    for (double J : inst.couplings) e += J;
    for (double h : inst.fields) e += h;

    const auto flip = [&](int b) {
        double r = inst.fields[b];
        for (int j = 0; j < n; ++j) {
            if (j == b) continue;
            const auto p = b < j ? pair_index(n, b, j) : pair_index(n, j, b);
            r += inst.couplings[p] * s[j];
        }
        e -= 2.0 * s[b] * r;
        s[b] = -s[b];
    };

    double e_min_scan = e;
    for (std::uint64_t c = 1; c < dim; ++c) {
        flip(std::countr_zero(c));
        e_min_scan = std::min(e_min_scan, e);
    }

    // Re-scan with a widened window (2x tolerance plus a pad for scan
    // drift), then filter candidates on exact energies.
    const double window = tol * std::max(1.0, std::abs(e_min_scan));
    const double window_scan = 2.0 * window + 1e-9 * std::max(1.0, std::abs(e_min_scan));

    std::fill(s.begin(), s.end(), 1.0);
    e = 0.0;
    for (double J : inst.couplings) e += J;
    for (double h : inst.fields) e += h;

    std::vector<std::uint64_t> candidates;
    if (e <= e_min_scan + window_scan) candidates.push_back(0);
    for (std::uint64_t c = 1; c < dim; ++c) {
        flip(std::countr_zero(c));
        if (e <= e_min_scan + window_scan) candidates.push_back(c ^ (c >> 1));
    }

    std::vector<double> exact(candidates.size());
    double e_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        exact[i] = classical_energy(inst, candidates[i]);
        e_min = std::min(e_min, exact[i]);
    }

    ClassicalSolution sol;
    sol.energy = e_min;
    const double keep = tol * std::max(1.0, std::abs(e_min));
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (exact[i] <= e_min + keep) sol.states.push_back(candidates[i]);
    std::sort(sol.states.begin(), sol.states.end());
    sol.degeneracy = static_cast<int>(sol.states.size());
    return sol;
}

// --- on-disk format -------------------------------------------------------
//
// One instance is a JSON object
//   {"J": [[i, j, value], ...], "h": [...], "n": ..., "seed": ...}
// with J triples in ascending lexicographic (i,j) order. Values survive a
// serialize/parse round trip exactly (shortest round-trip float encoding).

inline nlohmann::json instance_to_json(const ProblemInstance& inst) {
    nlohmann::json j;
    j["n"] = inst.n;
    j["seed"] = inst.seed;
    j["h"] = inst.fields;
    auto& J = j["J"] = nlohmann::json::array();
    for (int a = 0; a < inst.n; ++a)
        for (int b = a + 1; b < inst.n; ++b)
            J.push_back({a, b, inst.coupling(a, b)});
    return j;
}

inline std::string serialize_instance(const ProblemInstance& inst) {
    return instance_to_json(inst).dump();
}

// `where` names the document (e.g. "file.json" or "runs.jsonl:17") and is
// prefixed to every error message.
inline ProblemInstance instance_from_json(const nlohmann::json& j, const std::string& where = "instance") {
    const auto fail = [&](const std::string& msg) -> ProblemInstance {
        throw ParseError(where + ": " + msg);
    };

    if (!j.is_object()) return fail("document is not a JSON object");
    for (const char* key : {"n", "seed", "h", "J"})
        if (!j.contains(key)) return fail(std::string("missing field '") + key + "'");

    ProblemInstance inst;
    if (!j["n"].is_number_integer() || j["n"].get<std::int64_t>() < 1)
        return fail("field 'n' must be a positive integer");
    inst.n = j["n"].get<int>();
    if (inst.n > kMaxSpinCount) return fail("field 'n' above supported range");
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
        return fail("field 'seed' must be a 64-bit unsigned integer");
    inst.seed = j["seed"].get<std::uint64_t>();

    if (!j["h"].is_array() || j["h"].size() != static_cast<std::size_t>(inst.n))
        return fail("field 'h' must be an array of n reals");
    inst.fields.reserve(static_cast<std::size_t>(inst.n));
    for (const auto& v : j["h"]) {
        if (!v.is_number()) return fail("field 'h' must contain only numbers");
        inst.fields.push_back(v.get<double>());
    }

    const std::size_t np = pair_count(inst.n);
    inst.couplings.assign(np, 0.0);
    std::vector<bool> seen(np, false);
    if (!j["J"].is_array()) return fail("field 'J' must be an array of [i, j, value] triples");
    for (const auto& t : j["J"]) {
        if (!t.is_array() || t.size() != 3 || !t[0].is_number_integer() ||
            !t[1].is_number_integer() || !t[2].is_number())
            return fail("malformed 'J' entry; expected [i, j, value]");
        const int a = t[0].get<int>();
        const int b = t[1].get<int>();
        if (a < 0 || b <= a || b >= inst.n)
            return fail("coupling pair (" + std::to_string(a) + ", " + std::to_string(b) +
                        ") out of range or not ordered i < j");
        const std::size_t p = pair_index(inst.n, a, b);
        if (seen[p])
            return fail("duplicate coupling (" + std::to_string(a) + ", " + std::to_string(b) + ")");
        seen[p] = true;
        inst.couplings[p] = t[2].get<double>();
    }
    for (int a = 0; a < inst.n; ++a)
        for (int b = a + 1; b < inst.n; ++b)
            if (!seen[pair_index(inst.n, a, b)])
                return fail("missing coupling (" + std::to_string(a) + ", " + std::to_string(b) + ")");
    return inst;
}

inline ProblemInstance parse_instance(const std::string& text, const std::string& where = "instance") {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(where + ": " + e.what());
    }
    return instance_from_json(j, where);
}

} // namespace qanneal
