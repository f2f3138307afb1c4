#include <catch2/catch_amalgamated.hpp>

#include <bit>
#include <complex>
#include <random>

#include "oracles.hpp"
#include "qanneal/dynamics.hpp"
#include "qanneal/operators.hpp"

using namespace qanneal;
using Catch::Approx;

namespace {

AnnealSpec spec_for(DriverKind kind, int n, std::uint64_t mixed_seed = 17) {
    AnnealSpec spec;
    switch (kind) {
        case DriverKind::None: spec.driver = Driver::none(); break;
        case DriverKind::Ferro: spec.driver = Driver::ferro(); break;
        case DriverKind::Antiferro: spec.driver = Driver::antiferro(); break;
        case DriverKind::Mixed: spec.driver = Driver::mixed(n, mixed_seed); break;
    }
    return spec;
}

constexpr DriverKind kAllDrivers[] = {DriverKind::None, DriverKind::Ferro, DriverKind::Antiferro,
                                      DriverKind::Mixed};

} // namespace

TEST_CASE("schedule coefficients follow the annealing form", "[operators]") {
    AnnealSpec spec = spec_for(DriverKind::Ferro, 3);

    auto [a0, b0, c0] = schedule_coeffs(0.0, spec);
    CHECK(a0 == 1.0);
    CHECK(b0 == 0.0);
    CHECK(c0 == 0.0);

    auto [a1, b1, c1] = schedule_coeffs(1.0, spec);
    CHECK(a1 == 0.0);
    CHECK(b1 == 0.0);
    CHECK(c1 == 1.0);

    auto [am, bm, cm] = schedule_coeffs(0.5, spec);
    CHECK(am == 0.5);
    CHECK(bm == 0.25);  // lambda tau (1 - tau) at lambda = 1
    CHECK(cm == 0.5);

    const AnnealSpec bare = spec_for(DriverKind::None, 3);
    CHECK(schedule_coeffs(0.5, bare).b == 0.0);

    CHECK_THROWS_AS(schedule_coeffs(-0.1, spec), std::invalid_argument);
    CHECK_THROWS_AS(schedule_coeffs(1.1, spec), std::invalid_argument);

    AnnealSpec bad = spec;
    bad.T = 0.0;
    CHECK_THROWS_AS(schedule_coeffs(0.5, bad), std::invalid_argument);
}

TEST_CASE("tau = 1 is diagonal with classical energies", "[operators]") {
    const auto inst = generate_instance(4, 31);
    for (DriverKind kind : kAllDrivers) {
        const AnnealSpec spec = spec_for(kind, inst.n);
        const Hamiltonian ham(inst, spec);
        for (std::uint64_t s : {0ull, 5ull, 11ull, 15ull}) {
            const StateVector out = ham.apply(1.0, basis_state(inst.n, s));
            for (std::uint64_t k = 0; k < out.dim(); ++k) {
                if (k == s)
                    CHECK(out.amp[k].real() == classical_energy(inst, s));
                else
                    CHECK(out.amp[k] == std::complex<double>{});
            }
        }
    }
}

TEST_CASE("diagonal equals the classical cost on every basis state", "[operators]") {
    const auto inst = generate_instance(8, 2024);
    const Hamiltonian ham(inst, spec_for(DriverKind::Antiferro, inst.n));
    for (std::uint64_t k = 0; k < ham.dim(); ++k)
        CHECK(ham.diagonal()[k] == classical_energy(inst, k));
}

TEST_CASE("uniform transverse superposition is the tau = 0 eigenstate", "[operators]") {
    for (int n : {1, 3, 6}) {
        const auto inst = generate_instance(n, 7 + n);
        for (DriverKind kind : kAllDrivers) {
            const StateVector psi = initial_state(n);
            const StateVector hpsi = apply_hamiltonian(psi, 0.0, inst, spec_for(kind, n));
            for (std::uint64_t k = 0; k < hpsi.dim(); ++k)
                CHECK(hpsi.amp[k].real() == Approx(-n * psi.amp[k].real()).margin(1e-12));
        }
    }
}

TEST_CASE("matrix-free apply matches the dense materialization", "[operators]") {
    std::mt19937_64 rng(99);

    SECTION("random states at n = 2, tau = 0.4") {
        const auto inst = generate_instance(2, 5);
        for (DriverKind kind : kAllDrivers) {
            const AnnealSpec spec = spec_for(kind, 2);
            const Eigen::MatrixXd H = build_dense(0.4, inst, spec);
            const StateVector psi = oracles::random_state(2, rng);
            const StateVector out = apply_hamiltonian(psi, 0.4, inst, spec);
            for (std::uint64_t k = 0; k < out.dim(); ++k) {
                std::complex<double> expect = 0.0;
                for (std::uint64_t l = 0; l < out.dim(); ++l) expect += H(k, l) * psi.amp[l];
                CHECK(std::abs(out.amp[k] - expect) < 1e-12);
            }
        }
    }

    SECTION("every dense column equals apply on a basis vector, n = 3") {
        const auto inst = generate_instance(3, 8);
        for (DriverKind kind : kAllDrivers) {
            const AnnealSpec spec = spec_for(kind, 3);
            const Hamiltonian ham(inst, spec);
            for (double tau : {0.0, 0.3, 0.7, 1.0}) {
                const Eigen::MatrixXd H = build_dense(tau, inst, spec);
                for (std::uint64_t col = 0; col < ham.dim(); ++col) {
                    const StateVector out = ham.apply(tau, basis_state(3, col));
                    for (std::uint64_t row = 0; row < ham.dim(); ++row)
                        CHECK(std::abs(out.amp[row].real() - H(row, col)) < 1e-12);
                }
            }
        }
    }

    SECTION("dense matrix is symmetric") {
        const auto inst = generate_instance(5, 1);
        for (DriverKind kind : kAllDrivers) {
            const Eigen::MatrixXd H = build_dense(0.37, inst, spec_for(kind, 5));
            CHECK((H - H.transpose()).cwiseAbs().maxCoeff() < 1e-14);
        }
    }

    SECTION("capacity limit") {
        const auto big = generate_instance(13, 1);
        CHECK_THROWS_AS(build_dense(0.5, big, spec_for(DriverKind::None, 13)), CapacityError);
    }
}

TEST_CASE("apply is linear and Hermitian on random inputs", "[operators]") {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> tau_dist(0.0, 1.0);
    std::uniform_int_distribution<int> n_dist(1, 6);

    for (int trial = 0; trial < 100; ++trial) {
        const int n = n_dist(rng);
        const auto inst = generate_instance(n, 1000 + trial);
        const DriverKind kind = kAllDrivers[trial % 4];
        const AnnealSpec spec = spec_for(kind, n, 40 + trial);
        const Hamiltonian ham(inst, spec);
        const double tau = tau_dist(rng);
        const double scale = std::max(1.0, ham.norm_bound(tau));

        const StateVector psi = oracles::random_state(n, rng);
        const StateVector phi = oracles::random_state(n, rng);
        const std::complex<double> alpha{0.7, -0.2}, beta{-0.3, 1.1};

        StateVector mix;
        mix.n = n;
        mix.amp.resize(psi.dim());
        for (std::uint64_t k = 0; k < psi.dim(); ++k)
            mix.amp[k] = alpha * psi.amp[k] + beta * phi.amp[k];

        const StateVector h_mix = ham.apply(tau, mix);
        const StateVector h_psi = ham.apply(tau, psi);
        const StateVector h_phi = ham.apply(tau, phi);

        double lin_err = 0.0;
        for (std::uint64_t k = 0; k < psi.dim(); ++k)
            lin_err = std::max(lin_err,
                               std::abs(h_mix.amp[k] - alpha * h_psi.amp[k] - beta * h_phi.amp[k]));
        CHECK(lin_err < 1e-12 * scale);

        std::complex<double> phi_h_psi = 0.0, h_phi_psi = 0.0;
        for (std::uint64_t k = 0; k < psi.dim(); ++k) {
            phi_h_psi += std::conj(phi.amp[k]) * h_psi.amp[k];
            h_phi_psi += std::conj(h_phi.amp[k]) * psi.amp[k];
        }
        CHECK(std::abs(phi_h_psi - h_phi_psi) < 1e-12 * scale);
    }
}

TEST_CASE("ferro plus antiferro equals twice the bare annealer", "[operators]") {
    std::mt19937_64 rng(4321);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + trial % 5;
        const auto inst = generate_instance(n, 7000 + trial);
        const double tau = (trial + 1) / 101.0;

        const StateVector psi = oracles::random_state(n, rng);
        const StateVector hf = apply_hamiltonian(psi, tau, inst, spec_for(DriverKind::Ferro, n));
        const StateVector ha = apply_hamiltonian(psi, tau, inst, spec_for(DriverKind::Antiferro, n));
        const StateVector h0 = apply_hamiltonian(psi, tau, inst, spec_for(DriverKind::None, n));

        const double scale =
            std::max(1.0, 2.0 * Hamiltonian(inst, spec_for(DriverKind::None, n)).norm_bound(tau));
        double err = 0.0;
        for (std::uint64_t k = 0; k < psi.dim(); ++k)
            err = std::max(err, std::abs(hf.amp[k] + ha.amp[k] - 2.0 * h0.amp[k]));
        CHECK(err < 1e-12 * scale);
    }
}

TEST_CASE("mixed signs are deterministic and complete", "[operators]") {
    const auto d1 = Driver::mixed(6, 77);
    const auto d2 = Driver::mixed(6, 77);
    CHECK(d1.signs == d2.signs);
    CHECK(d1.signs.size() == pair_count(6));
    for (auto s : d1.signs) CHECK((s == 1 || s == -1));
    CHECK(Driver::mixed(6, 78).signs != d1.signs);
}

TEST_CASE("stoquasticity verdicts across drivers and gauges", "[operators]") {
    const auto inst = generate_instance(3, 12);
    const std::vector<int> plus(3, 1), minus(3, -1);

    SECTION("bare annealer is stoquastic under the all-minus gauge") {
        const AnnealSpec spec = spec_for(DriverKind::None, 3);
        CHECK(is_stoquastic(0.5, inst, spec, minus).stoquastic);
        // without the gauge the +sigma^x terms sit above the diagonal
        const auto raw = is_stoquastic(0.5, inst, spec, plus);
        CHECK_FALSE(raw.stoquastic);
        REQUIRE(raw.witness.has_value());
        CHECK(std::popcount(raw.witness->row ^ raw.witness->col) == 1);
        CHECK(raw.witness->value == Approx(0.5));  // a = 1 - tau
    }

    SECTION("ferro driver stays stoquastic along the whole schedule") {
        const AnnealSpec spec = spec_for(DriverKind::Ferro, 3);
        for (int i = 0; i <= 10; ++i)
            CHECK(is_stoquastic(i / 10.0, inst, spec, minus).stoquastic);
    }

    SECTION("antiferro driver is nonstoquastic at every interior point") {
        const AnnealSpec spec = spec_for(DriverKind::Antiferro, 3);
        for (int i = 1; i <= 9; ++i) {
            for (const auto& gauge : {plus, minus}) {
                const auto v = is_stoquastic(i / 10.0, inst, spec, gauge);
                CHECK_FALSE(v.stoquastic);
                REQUIRE(v.witness.has_value());
                CHECK(v.witness->value > 0.0);
            }
            // under the minus gauge the witness must be a pair flip
            const auto v = is_stoquastic(i / 10.0, inst, spec, minus);
            CHECK(std::popcount(v.witness->row ^ v.witness->col) == 2);
        }
    }

    SECTION("every driver is stoquastic at the diagonal endpoint") {
        for (DriverKind kind : kAllDrivers) {
            CHECK(is_stoquastic(1.0, inst, spec_for(kind, 3), plus).stoquastic);
            CHECK(is_stoquastic(1.0, inst, spec_for(kind, 3), minus).stoquastic);
        }
    }

    SECTION("capacity limit") {
        const auto big = generate_instance(13, 3);
        const std::vector<int> gauge(13, 1);
        CHECK_THROWS_AS(is_stoquastic(0.5, big, spec_for(DriverKind::None, 13), gauge),
                        CapacityError);
    }
}

TEST_CASE("gauge conjugation commutes with the verdict", "[operators]") {
    std::mt19937_64 rng(31337);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + trial % 4;
        const auto inst = generate_instance(n, 500 + trial);
        const DriverKind kind = kAllDrivers[trial % 4];
        const AnnealSpec spec = spec_for(kind, n);
        const double tau = (trial % 9 + 1) / 10.0;

        std::vector<int> gauge(n);
        for (auto& g : gauge) g = (rng() & 1) ? 1 : -1;

        const auto direct = is_stoquastic(tau, inst, spec, gauge);

        Eigen::MatrixXd H = build_dense(tau, inst, spec);
        const auto dim = static_cast<std::uint64_t>(H.rows());
        Eigen::VectorXd d(dim);
        for (std::uint64_t k = 0; k < dim; ++k) {
            int sign = 1;
            for (int i = 0; i < n; ++i)
                if (gauge[i] == -1 && ((k >> i) & 1)) sign = -sign;
            d[k] = sign;
        }
        const Eigen::MatrixXd conj = d.asDiagonal() * H * d.asDiagonal();
        const std::vector<int> identity(n, 1);
        const auto via_matrix = is_stoquastic_matrix(conj, identity);
        CHECK(direct.stoquastic == via_matrix.stoquastic);
    }
}
