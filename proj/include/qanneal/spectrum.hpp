#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qanneal/errors.hpp"
#include "qanneal/operators.hpp"
#include "qanneal/rng.hpp"

namespace qanneal {

enum class EigMethod { Auto, Dense, Lanczos };

constexpr int kDenseEigSpins = 10;  // Auto switches to Lanczos above this

struct EigOptions {
    double tol = 1e-9;          // residual target per Ritz pair
    int max_basis = 250;        // Krylov basis cap per restart cycle
    int max_restarts = 60;
    EigMethod method = EigMethod::Auto;
    const Eigen::VectorXd* warm_start = nullptr;
    std::uint64_t start_seed = 0x51EC5A11CE5ULL;
};

struct EigResult {
    std::vector<double> values;  // k lowest, ascending
    Eigen::MatrixXd vectors;     // dim x k
    double max_residual = 0.0;
};

namespace detail {

// Deterministic pseudo-random start vector; seed folds in the slot index
// so breakdown replacements differ from the initial vector.
inline Eigen::VectorXd lanczos_start(Eigen::Index dim, std::uint64_t seed, int slot) {
    Eigen::VectorXd v(dim);
    std::uint64_t s = splitmix64(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(slot + 1)));
    for (Eigen::Index i = 0; i < dim; ++i) {
        s = splitmix64(s);
        v[i] = u64_to_unit(s) - 0.5;
    }
    return v;
}

inline EigResult dense_lowest(const Hamiltonian& ham, double tau, int k) {
    const auto dim = static_cast<Eigen::Index>(ham.dim());
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
    ApplyWorkspace<double> ws;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim), col(dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        e[j] = 1.0;
        ham.apply(tau, e.data(), col.data(), ws);
        H.col(j) = col;
        e[j] = 0.0;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(H);
    EigResult res;
    res.values.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + k);
    res.vectors = solver.eigenvectors().leftCols(k);
    res.max_residual = 0.0;
    return res;
}

// Thick-restart Lanczos with full reorthogonalization of the Krylov
// basis. The projected matrix T is diagonal-plus-arrow over the kept Ritz
// vectors after a restart and tridiagonal beyond. Residual estimate for a
// Ritz pair is |beta_j * (last basis component)|, accurate under full
// reorthogonalization.
inline EigResult lanczos_lowest(const Hamiltonian& ham, double tau, int k, const EigOptions& opt) {
    const auto dim = static_cast<Eigen::Index>(ham.dim());
    const int m_max = static_cast<int>(std::min<Eigen::Index>(std::max(opt.max_basis, k + 2), dim));
    const double breakdown_tol = 1e-13 * std::max(1.0, ham.norm_bound(tau));

    Eigen::MatrixXd V(dim, m_max + 1);
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m_max, m_max);
    Eigen::VectorXd w(dim);
    ApplyWorkspace<double> ws;
    int fresh_slot = 0;

    if (opt.warm_start != nullptr && opt.warm_start->size() == dim) {
        // a faint random admixture keeps the start vector out of any
        // exact invariant subspace of the previous grid point
        V.col(0) = *opt.warm_start + 1e-6 * lanczos_start(dim, opt.start_seed, fresh_slot++);
    } else {
        V.col(0) = lanczos_start(dim, opt.start_seed, fresh_slot++);
    }
    V.col(0).normalize();

    int nkeep = 0;       // Ritz vectors carried over the last restart
    double beta = 0.0;   // coupling of the upcoming residual vector
    double last_residual = std::numeric_limits<double>::infinity();

    const auto extract = [&](int m, const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es,
                             double beta_m) {
        EigResult res;
        res.values.assign(es.eigenvalues().data(), es.eigenvalues().data() + k);
        res.vectors = V.leftCols(m) * es.eigenvectors().leftCols(k);
        res.max_residual = 0.0;
        for (int i = 0; i < k; ++i)
            res.max_residual = std::max(res.max_residual, std::abs(beta_m * es.eigenvectors()(m - 1, i)));
        return res;
    };

    for (int cycle = 0; cycle <= opt.max_restarts; ++cycle) {
        for (int j = nkeep; j < m_max; ++j) {
            ham.apply(tau, V.col(j).data(), w.data(), ws);
            const double alpha = V.col(j).dot(w);
            T(j, j) = alpha;
            w -= alpha * V.col(j);
            if (j == nkeep && nkeep > 0) {
                for (int i = 0; i < nkeep; ++i) w -= T(i, j) * V.col(i);
            } else if (j > 0) {
                w -= T(j - 1, j) * V.col(j - 1);
            }
            // full reorthogonalization, two passes
            for (int pass = 0; pass < 2; ++pass)
                w -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * w);
            beta = w.norm();

            const int m = j + 1;
            if (beta <= breakdown_tol) {
                // invariant subspace: continue in the orthogonal complement
                w = lanczos_start(dim, opt.start_seed, fresh_slot++);
                for (int pass = 0; pass < 2; ++pass)
                    w -= V.leftCols(m) * (V.leftCols(m).transpose() * w);
                const double wn = w.norm();
                if (wn <= breakdown_tol) {  // basis exhausted the space
                    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T.topLeftCorner(m, m));
                    return extract(m, es, 0.0);
                }
                w /= wn;
                beta = 0.0;
            } else {
                w /= beta;
            }
            V.col(m) = w;
            if (m < m_max) T(j, m) = T(m, j) = beta;

            const bool basis_full = m == m_max || m == dim;
            if (m >= k + 1 && (basis_full || (m - nkeep) % 8 == 0)) {
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T.topLeftCorner(m, m));
                double rmax = 0.0;
                for (int i = 0; i < k; ++i)
                    rmax = std::max(rmax, std::abs(beta * es.eigenvectors()(m - 1, i)));
                last_residual = rmax;
                if (rmax <= opt.tol || m == dim) return extract(m, es, beta);
                if (basis_full) {
                    // thick restart: keep the lowest Ritz pairs plus the
                    // residual direction
                    const int l = std::min(std::max(2 * k, k + 6), m - 2);
                    const Eigen::MatrixXd Y = V.leftCols(m) * es.eigenvectors().leftCols(l);
                    Eigen::VectorXd arrows(l);
                    for (int i = 0; i < l; ++i)
                        arrows[i] = beta * es.eigenvectors()(m - 1, i);
                    V.leftCols(l) = Y;
                    V.col(l) = V.col(m);
                    T.setZero();
                    for (int i = 0; i < l; ++i) {
                        T(i, i) = es.eigenvalues()[i];
                        T(i, l) = T(l, i) = arrows[i];
                    }
                    nkeep = l;
                }
            }
        }
    }
    throw SolverError("lanczos_lowest: no convergence after " + std::to_string(opt.max_restarts) +
                          " restarts (residual " + std::to_string(last_residual) + ")",
                      last_residual);
}

} // namespace detail

// k lowest eigenvalues (with eigenvectors) of H(tau). Dense full
// diagonalization for n <= 10 under Auto, matrix-free Lanczos beyond.
inline EigResult lowest_eigs(const Hamiltonian& ham, double tau, int k, const EigOptions& opt = {}) {
    if (k < 1) throw std::invalid_argument("lowest_eigs: k must be >= 1");
    if (static_cast<std::uint64_t>(k) > ham.dim())
        throw std::invalid_argument("lowest_eigs: k exceeds the Hilbert-space dimension");

    EigMethod method = opt.method;
    if (method == EigMethod::Auto)
        method = ham.n() <= kDenseEigSpins ? EigMethod::Dense : EigMethod::Lanczos;
    if (method == EigMethod::Dense) {
        if (ham.n() > kMaxDenseSpins)
            throw CapacityError("lowest_eigs: dense method limited to n <= 12");
        return detail::dense_lowest(ham, tau, k);
    }
    return detail::lanczos_lowest(ham, tau, k, opt);
}

inline EigResult lowest_eigs(double tau, const ProblemInstance& inst, const AnnealSpec& spec,
                             int k, const EigOptions& opt = {}) {
    return lowest_eigs(Hamiltonian(inst, spec), tau, k, opt);
}

// Instantaneous low-lying spectrum on a tau grid; energies are stored flat,
// k per grid point, ascending within a point.
struct SpectrumTrace {
    std::vector<double> taus;      // ascending, contains 0 and 1
    std::vector<double> energies;  // taus.size() * k, [point * k + level]
    int k = 0;
    bool refined = false;

    std::size_t points() const { return taus.size(); }
    double energy(std::size_t point, int level) const { return energies[point * k + level]; }
    double gap(std::size_t point) const { return energy(point, 1) - energy(point, 0); }
};

struct GapStats {
    double min_gap = 0.0;
    double tau_star = 0.0;
    int anticrossings = 0;
};

struct TraceOptions {
    int coarse_points = 201;
    int k = 2;
    double refine_spacing = 1e-4;  // target tau spacing at each gap minimum
    EigOptions eig;
};

// Uniform coarse grid over [0,1], then bisection refinement around every
// interior local minimum of E1 - E0 until the spacing at each minimum
// reaches refine_spacing. Every evaluated point enters the merged trace.
inline SpectrumTrace trace_spectrum(const ProblemInstance& inst, const AnnealSpec& spec,
                                    const TraceOptions& topt = {}) {
    if (topt.coarse_points < 3)
        throw std::invalid_argument("trace_spectrum: need at least 3 coarse points");
    if (topt.k < 1) throw std::invalid_argument("trace_spectrum: k must be >= 1");

    Hamiltonian ham(inst, spec);
    std::map<double, std::vector<double>> evaluated;
    Eigen::VectorXd warm;

    const auto eval = [&](double tau) -> const std::vector<double>& {
        auto it = evaluated.find(tau);
        if (it != evaluated.end()) return it->second;
        EigOptions eo = topt.eig;
        if (warm.size() > 0) eo.warm_start = &warm;
        EigResult res;
        try {
            res = lowest_eigs(ham, tau, topt.k, eo);
        } catch (const SolverError& e) {
            throw SolverError("trace_spectrum at tau = " + std::to_string(tau) + ": " + e.what(),
                              e.residual);
        }
        warm = res.vectors.col(0);
        return evaluated.emplace(tau, std::move(res.values)).first->second;
    };

    const int P = topt.coarse_points;
    std::vector<double> grid(P);
    for (int i = 0; i < P; ++i)
        grid[i] = i == P - 1 ? 1.0 : static_cast<double>(i) / (P - 1);
    for (double tau : grid) eval(tau);

    if (topt.k >= 2) {
        const auto gap_at = [&](double tau) {
            const auto& e = evaluated.at(tau);
            return e[1] - e[0];
        };
        // interior strict local minima of the coarse gap
        std::vector<std::array<double, 3>> dips;
        for (int i = 1; i + 1 < P; ++i) {
            const double g = gap_at(grid[i]);
            if (g < gap_at(grid[i - 1]) && g < gap_at(grid[i + 1]))
                dips.push_back({grid[i - 1], grid[i], grid[i + 1]});
        }
        for (auto [lo, mid, hi] : dips) {
            while (hi - lo > 2.0 * topt.refine_spacing) {
                const double pl = 0.5 * (lo + mid);
                const double pr = 0.5 * (mid + hi);
                eval(pl);
                eval(pr);
                // narrow to the neighborhood of the smallest of the three
                // candidate centers
                const double gl = gap_at(pl), gm = gap_at(mid), gr = gap_at(pr);
                if (gl <= gm && gl <= gr) {
                    hi = mid;
                    mid = pl;
                } else if (gr < gm && gr < gl) {
                    lo = mid;
                    mid = pr;
                } else {
                    lo = pl;
                    hi = pr;
                }
            }
        }
    }

    SpectrumTrace trace;
    trace.k = topt.k;
    trace.refined = true;
    trace.taus.reserve(evaluated.size());
    trace.energies.reserve(evaluated.size() * topt.k);
    for (const auto& [tau, energies] : evaluated) {
        trace.taus.push_back(tau);
        trace.energies.insert(trace.energies.end(), energies.begin(), energies.end());
    }
    return trace;
}

inline SpectrumTrace trace_spectrum(const ProblemInstance& inst, const AnnealSpec& spec,
                                    int coarse_points, int k = 2) {
    TraceOptions topt;
    topt.coarse_points = coarse_points;
    topt.k = k;
    return trace_spectrum(inst, spec, topt);
}

// Minimum of E1 - E0 over the trace and its location (first occurrence on
// ties).
inline std::pair<double, double> min_gap(const SpectrumTrace& trace) {
    if (trace.k < 2) throw std::invalid_argument("min_gap: trace must hold at least two levels");
    if (trace.points() == 0) throw std::invalid_argument("min_gap: empty trace");
    double best = trace.gap(0);
    double tau_star = trace.taus[0];
    for (std::size_t i = 1; i < trace.points(); ++i) {
        if (trace.gap(i) < best) {
            best = trace.gap(i);
            tau_star = trace.taus[i];
        }
    }
    return {best, tau_star};
}

// Counts strict interior local minima of the gap whose prominence (depth
// below both flanking maxima, walked out to the nearest lower point)
// exceeds `prominence`. The default 0 counts every strict local minimum.
inline int count_anticrossings(const SpectrumTrace& trace, double prominence = 0.0) {
    if (!trace.refined) throw std::logic_error("count_anticrossings: trace is not refined");
    if (trace.k < 2) throw std::invalid_argument("count_anticrossings: trace must hold two levels");
    if (prominence < 0.0) throw std::invalid_argument("count_anticrossings: prominence must be >= 0");

    const std::size_t P = trace.points();
    int count = 0;
    for (std::size_t i = 1; i + 1 < P; ++i) {
        const double g = trace.gap(i);
        if (!(g < trace.gap(i - 1) && g < trace.gap(i + 1))) continue;

        double left_max = g;
        for (std::size_t j = i; j-- > 0;) {
            if (trace.gap(j) < g) break;
            left_max = std::max(left_max, trace.gap(j));
        }
        double right_max = g;
        for (std::size_t j = i + 1; j < P; ++j) {
            if (trace.gap(j) < g) break;
            right_max = std::max(right_max, trace.gap(j));
        }
        if (std::min(left_max, right_max) - g > prominence) ++count;
    }
    return count;
}

inline GapStats gap_stats(const SpectrumTrace& trace, double prominence = 0.0) {
    const auto [delta, tau_star] = min_gap(trace);
    return {delta, tau_star, count_anticrossings(trace, prominence)};
}

} // namespace qanneal
