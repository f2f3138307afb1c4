// Test-only oracles, independent of the library implementation paths they
// check: dense matrix-exponential stepping for the propagator, dense
// spectral scans for gap tracking, and naive statistics.
#pragma once

#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "qanneal/dynamics.hpp"
#include "qanneal/instance.hpp"
#include "qanneal/operators.hpp"

namespace oracles {

inline qanneal::StateVector random_state(int n, std::mt19937_64& rng, bool normalize = true) {
    std::normal_distribution<double> dist;
    qanneal::StateVector psi;
    psi.n = n;
    psi.amp.resize(std::uint64_t{1} << n);
    for (auto& a : psi.amp) a = {dist(rng), dist(rng)};
    if (normalize) {
        const double nrm = psi.norm();
        for (auto& a : psi.amp) a /= nrm;
    }
    return psi;
}

// Propagates with dense matrix exponentials exp(-i H(t_mid) dt) per step:
// exact for each frozen mid-step Hamiltonian, so its error is set purely
// by the schedule's time dependence. Small n only.
inline qanneal::StateVector expm_midpoint_propagate(const qanneal::ProblemInstance& inst,
                                                    const qanneal::AnnealSpec& spec,
                                                    std::int64_t steps) {
    const std::uint64_t dim = std::uint64_t{1} << inst.n;
    const double dt = spec.T / static_cast<double>(steps);

    qanneal::StateVector psi = qanneal::initial_state(inst.n);
    Eigen::VectorXcd y(dim);
    for (std::uint64_t k = 0; k < dim; ++k) y[k] = psi.amp[k];

    for (std::int64_t s = 0; s < steps; ++s) {
        const double tau_mid = (static_cast<double>(s) + 0.5) / static_cast<double>(steps);
        const Eigen::MatrixXd H = qanneal::build_dense(tau_mid, inst, spec);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
        Eigen::VectorXcd phases(dim);
        for (std::uint64_t k = 0; k < dim; ++k)
            phases[k] = std::exp(std::complex<double>(0.0, -es.eigenvalues()[k] * dt));
        y = es.eigenvectors() * (phases.asDiagonal() * (es.eigenvectors().transpose() * y));
    }
    for (std::uint64_t k = 0; k < dim; ++k) psi.amp[k] = y[k];
    return psi;
}

inline double fidelity(const qanneal::StateVector& a, const qanneal::StateVector& b) {
    std::complex<double> overlap = 0.0;
    for (std::uint64_t k = 0; k < a.dim(); ++k)
        overlap += std::conj(a.amp[k]) * b.amp[k];
    return std::norm(overlap);
}

// Uniform dense scan of the E1 - E0 gap; the brute-force reference for
// min-gap tracking.
inline std::pair<double, double> scan_min_gap(const qanneal::ProblemInstance& inst,
                                              const qanneal::AnnealSpec& spec, int points) {
    double best = std::numeric_limits<double>::infinity();
    double tau_star = 0.0;
    for (int i = 0; i < points; ++i) {
        const double tau = static_cast<double>(i) / (points - 1);
        const Eigen::MatrixXd H = qanneal::build_dense(tau, inst, spec);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
        const double gap = es.eigenvalues()[1] - es.eigenvalues()[0];
        if (gap < best) {
            best = gap;
            tau_star = tau;
        }
    }
    return {best, tau_star};
}

// Quadratic-time order statistic: the value v such that exactly rank
// values are <= v, with rank = ceil(q m / 100).
inline double selection_percentile(std::vector<double> values, int q) {
    const std::size_t m = values.size();
    const std::size_t rank = (static_cast<std::size_t>(q) * m + 99) / 100;
    for (double candidate : values) {
        std::size_t below = 0, equal = 0;
        for (double v : values) {
            if (v < candidate) ++below;
            if (v == candidate) ++equal;
        }
        if (below < rank && below + equal >= rank) return candidate;
    }
    return values.front();
}

} // namespace oracles
