#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qanneal/errors.hpp"
#include "qanneal/instance.hpp"

namespace qanneal {

constexpr int kMaxDenseSpins = 12;  // 2^12 x 2^12 materialization cap
constexpr int kMaxStateSpins = 26;  // state-vector memory cap

// The four annealers: the transverse-field reference H^0 and the three
// coupled-driver variants with ferromagnetic (-), antiferromagnetic (+)
// and mixed-sign sigma^x sigma^x intermediate terms.
enum class DriverKind { None, Ferro, Antiferro, Mixed };

inline const char* driver_label(DriverKind k) {
    switch (k) {
        case DriverKind::None:      return "0";
        case DriverKind::Ferro:     return "F";
        case DriverKind::Antiferro: return "A";
        case DriverKind::Mixed:     return "M";
    }
    return "?";
}

inline DriverKind driver_from_label(std::string_view s) {
    if (s == "0" || s == "none") return DriverKind::None;
    if (s == "F" || s == "f") return DriverKind::Ferro;
    if (s == "A" || s == "a") return DriverKind::Antiferro;
    if (s == "M" || s == "m") return DriverKind::Mixed;
    throw std::invalid_argument("unknown driver label '" + std::string(s) + "' (expected 0, F, A or M)");
}

// Mixed-sign couplings r_ij in {-1,+1}, one mt19937_64 draw per pair in
// lexicographic (i,j) order, sign from the low bit. Deterministic in
// (n, seed).
inline std::vector<std::int8_t> mixed_signs(int n, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::vector<std::int8_t> r(pair_count(n));
    for (auto& s : r) s = (eng() & 1u) ? std::int8_t{+1} : std::int8_t{-1};
    return r;
}

struct Driver {
    DriverKind kind = DriverKind::None;
    std::uint64_t seed = 0;             // Mixed only
    std::vector<std::int8_t> signs;     // Mixed only, packed like couplings

    static Driver none() { return {}; }
    static Driver ferro() { return {DriverKind::Ferro, 0, {}}; }
    static Driver antiferro() { return {DriverKind::Antiferro, 0, {}}; }
    static Driver mixed(int n, std::uint64_t seed) {
        return {DriverKind::Mixed, seed, mixed_signs(n, seed)};
    }
};

// Annealing schedule H(tau) = (1-tau) H_B + lambda tau(1-tau) H_I + tau H_P
// over tau = t/T in [0,1], with hbar = 1 and dimensionless energies.
struct AnnealSpec {
    Driver driver;
    double lambda = 1.0;
    double T = 100.0;

    void validate() const {
        if (!(T > 0.0)) throw std::invalid_argument("AnnealSpec: total time T must be positive");
        if (!std::isfinite(lambda)) throw std::invalid_argument("AnnealSpec: lambda must be finite");
    }
};

struct ScheduleCoeffs {
    double a;  // coefficient of H_B
    double b;  // coefficient of H_I (zero when the driver is None)
    double c;  // coefficient of H_P
};

inline ScheduleCoeffs schedule_coeffs(double tau, const AnnealSpec& spec) {
    spec.validate();
    if (!(tau >= 0.0 && tau <= 1.0))
        throw std::invalid_argument("schedule_coeffs: tau must lie in [0,1]");
    const double b = spec.driver.kind == DriverKind::None ? 0.0 : spec.lambda * tau * (1.0 - tau);
    return {1.0 - tau, b, tau};
}

// Complex amplitude vector over the 2^n sigma^z basis states.
struct StateVector {
    int n = 0;
    std::vector<std::complex<double>> amp;

    std::uint64_t dim() const { return amp.size(); }

    double norm() const {
        double s = 0.0;
        for (const auto& a : amp) s += std::norm(a);
        return std::sqrt(s);
    }
};

inline StateVector basis_state(int n, std::uint64_t k) {
    StateVector psi;
    psi.n = n;
    psi.amp.assign(std::uint64_t{1} << n, {0.0, 0.0});
    psi.amp[k] = 1.0;
    return psi;
}

template <class Scalar>
struct ApplyWorkspace {
    std::vector<Scalar> t1, t2;
};

// Matrix-free application of H(tau) on 2^n-dimensional vectors.
//
// The sigma^z diagonal is precomputed once per instance (classical_energy
// per basis state, 2^n doubles). Single spin flips cost O(n 2^n) per
// apply. For the uniform-sign drivers the pair-flip term uses
//   sum_{i<j} sx_i sx_j = ((sum_i sx_i)^2 - n) / 2,
// i.e. two single-flip passes, while Mixed walks its n(n-1)/2 masks.
class Hamiltonian {
public:
    Hamiltonian(const ProblemInstance& inst, AnnealSpec spec)
        : n_(inst.n), dim_(std::uint64_t{1} << inst.n), spec_(std::move(spec)) {
        spec_.validate();
        if (inst.n < 1) throw std::invalid_argument("Hamiltonian: empty instance");
        if (inst.n > kMaxStateSpins)
            throw CapacityError("Hamiltonian: n = " + std::to_string(inst.n) +
                                " exceeds the state-vector limit");
        if (spec_.driver.kind == DriverKind::Mixed) {
            if (spec_.driver.signs.empty())
                spec_.driver.signs = mixed_signs(n_, spec_.driver.seed);
            if (spec_.driver.signs.size() != pair_count(n_))
                throw std::invalid_argument("Hamiltonian: Mixed driver sign count does not match n(n-1)/2");

            // Split r_ij into the uniform pair sum and its minority-sign
            // pairs: sum_{i<j} r_ij ss = +-[(S^2 - n)/2] -+ 2 sum_minority ss,
            // so the apply only walks the smaller pair subset.
            std::vector<std::uint64_t> neg, pos;
            std::size_t p = 0;
            for (int i = 0; i < n_; ++i)
                for (int j = i + 1; j < n_; ++j, ++p) {
                    const std::uint64_t m = (std::uint64_t{1} << i) | (std::uint64_t{1} << j);
                    (spec_.driver.signs[p] < 0 ? neg : pos).push_back(m);
                }
            minority_is_neg_ = neg.size() <= pos.size();
            minority_masks_ = minority_is_neg_ ? std::move(neg) : std::move(pos);
        }

        diag_.resize(dim_);
        for (std::uint64_t k = 0; k < dim_; ++k)
            diag_[k] = classical_energy(inst, k);
        max_abs_diag_ = 0.0;
        for (double d : diag_) max_abs_diag_ = std::max(max_abs_diag_, std::abs(d));
    }

    int n() const { return n_; }
    std::uint64_t dim() const { return dim_; }
    const AnnealSpec& spec() const { return spec_; }
    const std::vector<double>& diagonal() const { return diag_; }
    double max_abs_diagonal() const { return max_abs_diag_; }

    // out = H(tau) in. Works for Scalar = double (real symmetric action)
    // and Scalar = std::complex<double>.
    template <class Scalar>
    void apply(double tau, const Scalar* in, Scalar* out, ApplyWorkspace<Scalar>& ws) const {
        const auto [a, b, c] = schedule_coeffs(tau, spec_);

        ws.t1.resize(dim_);
        const bool need_t1 = a != 0.0 || b != 0.0;

        if (need_t1) single_flip_sum(in, ws.t1.data());
        for (std::uint64_t k = 0; k < dim_; ++k)
            out[k] = (c * diag_[k]) * in[k];
        if (a != 0.0)
            for (std::uint64_t k = 0; k < dim_; ++k)
                out[k] += a * ws.t1[k];

        if (b == 0.0) return;

        // uniform pair sum (S^2 - n)/2 via a second single-flip pass
        ws.t2.resize(dim_);
        single_flip_sum(ws.t1.data(), ws.t2.data());
        double coef = 0.0;
        switch (spec_.driver.kind) {
            case DriverKind::Ferro: coef = -0.5 * b; break;
            case DriverKind::Antiferro: coef = 0.5 * b; break;
            case DriverKind::Mixed: coef = minority_is_neg_ ? 0.5 * b : -0.5 * b; break;
            case DriverKind::None: return;
        }
        const double nn = static_cast<double>(n_);
        for (std::uint64_t k = 0; k < dim_; ++k)
            out[k] += coef * (ws.t2[k] - nn * in[k]);

        if (spec_.driver.kind == DriverKind::Mixed) {
            const double w = minority_is_neg_ ? -2.0 * b : 2.0 * b;
            for (const std::uint64_t m : minority_masks_)
                for (std::uint64_t k = 0; k < dim_; ++k)
                    out[k] += w * in[k ^ m];
        }
    }

    StateVector apply(double tau, const StateVector& psi) const {
        if (psi.dim() != dim_ || psi.n != n_)
            throw std::invalid_argument("Hamiltonian::apply: state dimension does not match instance");
        StateVector out;
        out.n = n_;
        out.amp.resize(dim_);
        ApplyWorkspace<std::complex<double>> ws;
        apply(tau, psi.amp.data(), out.amp.data(), ws);
        return out;
    }

    // Coefficient-weighted operator-norm bound
    //   |H(tau)| <= (1-tau) n + |b(tau)| n(n-1)/2 + tau max_k |E_P(k)|.
    double norm_bound(double tau) const {
        const auto [a, b, c] = schedule_coeffs(tau, spec_);
        return a * n_ + std::abs(b) * static_cast<double>(pair_count(n_)) + c * max_abs_diag_;
    }

    // Maximum of norm_bound over the schedule; closed form of the
    // piecewise-quadratic bound evaluated at its stationary point.
    double max_norm_bound() const {
        const double n = n_;
        const double P = spec_.driver.kind == DriverKind::None
                             ? 0.0
                             : std::abs(spec_.lambda) * static_cast<double>(pair_count(n_));
        const double D = max_abs_diag_;
        double best = std::max(norm_bound(0.0), norm_bound(1.0));
        if (P > 0.0) {
            const double tau_star = ((D - n) / P + 1.0) / 2.0;
            if (tau_star > 0.0 && tau_star < 1.0)
                best = std::max(best, (1.0 - tau_star) * n + P * tau_star * (1.0 - tau_star) + tau_star * D);
        }
        return best;
    }

private:
    // out[k] = sum_i in[k ^ (1 << i)]  (the H_B = +sum sigma^x action)
    template <class Scalar>
    void single_flip_sum(const Scalar* in, Scalar* out) const {
        std::fill(out, out + dim_, Scalar{});
        for (int bit = 0; bit < n_; ++bit) {
            const std::uint64_t half = std::uint64_t{1} << bit;
            for (std::uint64_t base = 0; base < dim_; base += 2 * half) {
                for (std::uint64_t off = 0; off < half; ++off) {
                    const std::uint64_t k = base + off;
                    out[k] += in[k + half];
                    out[k + half] += in[k];
                }
            }
        }
    }

    int n_;
    std::uint64_t dim_;
    AnnealSpec spec_;
    std::vector<double> diag_;
    double max_abs_diag_ = 0.0;
    std::vector<std::uint64_t> minority_masks_;  // Mixed only
    bool minority_is_neg_ = true;
};

// Convenience one-shot form; rebuilds the diagonal on every call, so reuse
// a Hamiltonian when applying repeatedly.
inline StateVector apply_hamiltonian(const StateVector& psi, double tau,
                                     const ProblemInstance& inst, const AnnealSpec& spec) {
    return Hamiltonian(inst, spec).apply(tau, psi);
}

// Dense materialization for small-n oracles; entries agree with
// Hamiltonian::apply on every basis vector.
inline Eigen::MatrixXd build_dense(double tau, const ProblemInstance& inst, const AnnealSpec& spec) {
    if (inst.n > kMaxDenseSpins)
        throw CapacityError("build_dense: n = " + std::to_string(inst.n) +
                            " exceeds the dense materialization limit");
    Hamiltonian ham(inst, spec);
    const auto [a, b, c] = schedule_coeffs(tau, ham.spec());
    const std::uint64_t dim = ham.dim();

    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                              static_cast<Eigen::Index>(dim));
    for (std::uint64_t k = 0; k < dim; ++k) {
        H(k, k) = c * ham.diagonal()[k];
        for (int i = 0; i < inst.n; ++i)
            H(k, k ^ (std::uint64_t{1} << i)) += a;
    }
    if (b != 0.0) {
        const auto& drv = ham.spec().driver;
        std::size_t p = 0;
        for (int i = 0; i < inst.n; ++i) {
            for (int j = i + 1; j < inst.n; ++j, ++p) {
                double sgn = 0.0;
                switch (drv.kind) {
                    case DriverKind::Ferro:     sgn = -1.0; break;
                    case DriverKind::Antiferro: sgn = +1.0; break;
                    case DriverKind::Mixed:     sgn = static_cast<double>(drv.signs[p]); break;
                    case DriverKind::None:      break;
                }
                const std::uint64_t m = (std::uint64_t{1} << i) | (std::uint64_t{1} << j);
                for (std::uint64_t k = 0; k < dim; ++k)
                    H(k, k ^ m) += b * sgn;
            }
        }
    }
    return H;
}

struct StoqWitness {
    std::uint64_t row;
    std::uint64_t col;
    double value;  // gauged matrix entry, positive beyond tolerance
};

struct StoqVerdict {
    bool stoquastic = false;
    std::optional<StoqWitness> witness;
};

constexpr double kStoqTolerance = 1e-14;

// Sign condition on a dense symmetric matrix after conjugation by the
// diagonal gauge D = diag(prod_i gauge_i^{bit_i(k)}) -- equivalent to
// flipping the sign of sigma^x_i wherever gauge_i = -1. Stoquastic iff
// every gauged off-diagonal entry is <= +tol.
inline StoqVerdict is_stoquastic_matrix(const Eigen::MatrixXd& H, std::span<const int> gauge,
                                        double tol = kStoqTolerance) {
    std::uint64_t neg_mask = 0;
    for (std::size_t i = 0; i < gauge.size(); ++i) {
        if (gauge[i] != 1 && gauge[i] != -1)
            throw std::invalid_argument("is_stoquastic: gauge entries must be +1 or -1");
        if (gauge[i] == -1) neg_mask |= std::uint64_t{1} << i;
    }
    const auto dim = static_cast<std::uint64_t>(H.rows());
    const auto sign_of = [&](std::uint64_t k) {
        return (std::popcount(k & neg_mask) & 1) ? -1.0 : 1.0;
    };
    for (std::uint64_t k = 0; k < dim; ++k) {
        const double dk = sign_of(k);
        for (std::uint64_t l = k + 1; l < dim; ++l) {
            const double v = dk * H(k, l) * sign_of(l);
            if (v > tol) return {false, StoqWitness{k, l, v}};
        }
    }
    return {true, std::nullopt};
}

inline StoqVerdict is_stoquastic(double tau, const ProblemInstance& inst, const AnnealSpec& spec,
                                 std::span<const int> gauge, double tol = kStoqTolerance) {
    if (inst.n > kMaxDenseSpins)
        throw CapacityError("is_stoquastic: n exceeds the dense inspection limit");
    if (gauge.size() != static_cast<std::size_t>(inst.n))
        throw std::invalid_argument("is_stoquastic: gauge must carry one sign per spin");
    return is_stoquastic_matrix(build_dense(tau, inst, spec), gauge, tol);
}

} // namespace qanneal
