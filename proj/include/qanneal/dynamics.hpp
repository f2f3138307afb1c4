#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "qanneal/errors.hpp"
#include "qanneal/instance.hpp"
#include "qanneal/operators.hpp"

namespace qanneal {

// Ground state of H_B = +sum sigma^x: the product state with each spin in
// (|0> - |1>)/sqrt(2), energy -n. Amplitude of basis state k is
// (-1)^popcount(k) / sqrt(2^n).
inline StateVector initial_state(int n) {
    if (n < 1) throw std::invalid_argument("initial_state: spin count must be >= 1");
    if (n > kMaxStateSpins) throw CapacityError("initial_state: n exceeds the state-vector limit");
    StateVector psi;
    psi.n = n;
    const std::uint64_t dim = std::uint64_t{1} << n;
    const double mag = 1.0 / std::sqrt(static_cast<double>(dim));
    psi.amp.resize(dim);
    for (std::uint64_t k = 0; k < dim; ++k)
        psi.amp[k] = (std::popcount(k) & 1) ? -mag : mag;
    return psi;
}

// Squared overlap with the classical ground subspace: the equal-weight sum
// sum_g |<g|psi>|^2 over the degenerate ground configurations, each term a
// squared amplitude magnitude in the sigma^z basis.
inline double success_probability(const StateVector& final_state, const ClassicalSolution& ground) {
    if (ground.states.empty())
        throw std::invalid_argument("success_probability: empty ground-state set");
    double p = 0.0;
    for (std::uint64_t g : ground.states) {
        if (g >= final_state.dim())
            throw std::invalid_argument("success_probability: ground state outside the basis");
        p += std::norm(final_state.amp[g]);
    }
    return p;
}

struct PropagationResult {
    StateVector final_state;         // at tau = 1
    double norm_drift = 0.0;         // max ||psi| - 1| observed
    std::int64_t steps = 0;
    double success_probability = 0.0;
    bool drift_ok = true;
};

enum class DriftPolicy { Throw, Flag };

constexpr double kDriftTolerance = 1e-6;

// Fixed-step count from the schedule-wide operator-norm bound,
// steps = ceil(40 T max_tau |H(tau)|_bound); keeps the step-wise RK4 norm
// loss comfortably below the 1e-6 drift budget (certified against
// convergence_study).
inline std::int64_t auto_steps(const Hamiltonian& ham) {
    const double s = 40.0 * ham.spec().T * ham.max_norm_bound();
    return std::max<std::int64_t>(50, static_cast<std::int64_t>(std::ceil(s)));
}

struct PropagateOptions {
    std::int64_t steps = 0;                   // 0 -> auto_steps
    DriftPolicy drift_policy = DriftPolicy::Throw;
    double drift_tol = kDriftTolerance;
    const ClassicalSolution* ground = nullptr;  // precomputed target, else enumerated here
    // Optional trace sink called every trace_every steps with
    // (tau, norm, instantaneous energy <psi|H|psi>).
    int trace_every = 0;
    std::function<void(double, double, double)> trace_sink;
};

namespace detail {

inline std::complex<double> mul_neg_i(std::complex<double> z) {
    return {z.imag(), -z.real()};
}

} // namespace detail

// Integrates i d/dt |psi> = H(t/T) |psi> from the H_B ground state to
// tau = 1 with classical fixed-step RK4 (stage Hamiltonians at the step
// midpoint and endpoints). No renormalization is applied; the norm drift
// is the error diagnostic.
inline PropagationResult propagate(const ProblemInstance& inst, const AnnealSpec& spec,
                                   const PropagateOptions& opt = {}) {
    spec.validate();
    if (opt.steps < 0) throw std::invalid_argument("propagate: steps must be >= 1 (or 0 for auto)");
    Hamiltonian ham(inst, spec);
    const std::int64_t steps = opt.steps > 0 ? opt.steps : auto_steps(ham);
    const std::uint64_t dim = ham.dim();
    const double dt = spec.T / static_cast<double>(steps);

    StateVector psi = initial_state(inst.n);
    std::vector<std::complex<double>> hw(dim), acc(dim), ytmp(dim);
    ApplyWorkspace<std::complex<double>> ws;
    auto* y = psi.amp.data();

    double drift = 0.0;
    const auto note_norm = [&] {
        drift = std::max(drift, std::abs(psi.norm() - 1.0));
    };

    const auto emit_trace = [&](std::int64_t step) {
        if (opt.trace_every <= 0 || !opt.trace_sink) return;
        if (step % opt.trace_every != 0 && step != steps) return;
        const double tau = static_cast<double>(step) / static_cast<double>(steps);
        ham.apply(tau, y, hw.data(), ws);
        double energy = 0.0;
        for (std::uint64_t k = 0; k < dim; ++k)
            energy += (std::conj(psi.amp[k]) * hw[k]).real();
        opt.trace_sink(tau, psi.norm(), energy);
    };

    note_norm();
    emit_trace(0);
    for (std::int64_t s = 0; s < steps; ++s) {
        // stage taus hit 0 and 1 exactly at the schedule endpoints
        const double tau0 = static_cast<double>(s) / static_cast<double>(steps);
        const double tauh = (static_cast<double>(s) + 0.5) / static_cast<double>(steps);
        const double tau1 = static_cast<double>(s + 1) / static_cast<double>(steps);

        ham.apply(tau0, y, hw.data(), ws);  // k1
        for (std::uint64_t k = 0; k < dim; ++k) {
            const auto k1 = detail::mul_neg_i(hw[k]);
            acc[k] = k1;
            ytmp[k] = y[k] + 0.5 * dt * k1;
        }
        ham.apply(tauh, ytmp.data(), hw.data(), ws);  // k2
        for (std::uint64_t k = 0; k < dim; ++k) {
            const auto k2 = detail::mul_neg_i(hw[k]);
            acc[k] += 2.0 * k2;
            ytmp[k] = y[k] + 0.5 * dt * k2;
        }
        ham.apply(tauh, ytmp.data(), hw.data(), ws);  // k3
        for (std::uint64_t k = 0; k < dim; ++k) {
            const auto k3 = detail::mul_neg_i(hw[k]);
            acc[k] += 2.0 * k3;
            ytmp[k] = y[k] + dt * k3;
        }
        ham.apply(tau1, ytmp.data(), hw.data(), ws);  // k4
        for (std::uint64_t k = 0; k < dim; ++k) {
            acc[k] += detail::mul_neg_i(hw[k]);
            y[k] += (dt / 6.0) * acc[k];
        }

        note_norm();
        emit_trace(s + 1);
    }

    PropagationResult res;
    res.norm_drift = drift;
    res.steps = steps;
    res.drift_ok = drift <= opt.drift_tol;

    ClassicalSolution local_ground;
    const ClassicalSolution* ground = opt.ground;
    if (ground == nullptr) {
        local_ground = brute_force_ground(inst);
        ground = &local_ground;
    }
    res.success_probability = success_probability(psi, *ground);
    res.final_state = std::move(psi);

    if (!res.drift_ok && opt.drift_policy == DriftPolicy::Throw)
        throw ConvergenceError("propagate: norm drift " + std::to_string(drift) +
                                   " exceeds tolerance after " + std::to_string(steps) + " steps",
                               drift, steps);
    return res;
}

inline PropagationResult propagate(const ProblemInstance& inst, const AnnealSpec& spec,
                                   std::int64_t steps) {
    PropagateOptions opt;
    opt.steps = steps;
    return propagate(inst, spec, opt);
}

struct ConvergenceRow {
    std::int64_t steps;
    double success_probability;
    double norm_drift;
};

// Step-count validation sweep; drift violations are reported in the table
// rather than thrown.
inline std::vector<ConvergenceRow> convergence_study(const ProblemInstance& inst,
                                                     const AnnealSpec& spec,
                                                     const std::vector<std::int64_t>& step_counts) {
    for (std::size_t i = 1; i < step_counts.size(); ++i)
        if (step_counts[i] <= step_counts[i - 1])
            throw std::invalid_argument("convergence_study: step counts must be ascending");

    const ClassicalSolution ground = brute_force_ground(inst);
    std::vector<ConvergenceRow> rows;
    rows.reserve(step_counts.size());
    for (std::int64_t s : step_counts) {
        PropagateOptions opt;
        opt.steps = s;
        opt.drift_policy = DriftPolicy::Flag;
        opt.ground = &ground;
        const auto res = propagate(inst, spec, opt);
        rows.push_back({s, res.success_probability, res.norm_drift});
    }
    return rows;
}

} // namespace qanneal
