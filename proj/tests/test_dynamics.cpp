#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "oracles.hpp"
#include "qanneal/dynamics.hpp"

using namespace qanneal;
using Catch::Approx;

TEST_CASE("initial state is the transverse-field ground state", "[dynamics]") {
    const auto one = initial_state(1);
    CHECK(one.amp[0].real() == Approx(1.0 / std::sqrt(2.0)));
    CHECK(one.amp[1].real() == Approx(-1.0 / std::sqrt(2.0)));

    const auto two = initial_state(2);
    CHECK(two.amp[0].real() == Approx(0.5));
    CHECK(two.amp[1].real() == Approx(-0.5));
    CHECK(two.amp[2].real() == Approx(-0.5));
    CHECK(two.amp[3].real() == Approx(0.5));

    for (int n : {1, 4, 9}) {
        const auto psi = initial_state(n);
        CHECK(psi.norm() == Approx(1.0).margin(1e-12));
        const auto inst = generate_instance(n, 3);
        AnnealSpec spec;
        const auto hpsi = apply_hamiltonian(psi, 0.0, inst, spec);
        for (std::uint64_t k = 0; k < psi.dim(); ++k)
            CHECK(std::abs(hpsi.amp[k] - (-static_cast<double>(n)) * psi.amp[k]) < 1e-12);
    }
}

TEST_CASE("success probability is a ground-subspace projection", "[dynamics]") {
    ClassicalSolution ground;
    ground.energy = -1.0;
    ground.states = {0b00, 0b11};
    ground.degeneracy = 2;

    StateVector hit = basis_state(2, 0b00);
    CHECK(success_probability(hit, ground) == 1.0);

    StateVector miss = basis_state(2, 0b01);
    CHECK(success_probability(miss, ground) == 0.0);

    StateVector split;
    split.n = 2;
    split.amp = {std::complex<double>(1 / std::sqrt(2.0), 0), {}, {},
                 std::complex<double>(0, 1 / std::sqrt(2.0))};
    CHECK(success_probability(split, ground) == Approx(1.0).margin(1e-15));

    // global phase invariance, exactly
    StateVector rotated = split;
    const std::complex<double> phase = std::polar(1.0, 0.7342);
    for (auto& a : rotated.amp) a *= phase;
    CHECK(success_probability(rotated, ground) == success_probability(rotated, ground));

    ClassicalSolution empty;
    CHECK_THROWS_AS(success_probability(hit, empty), std::invalid_argument);
}

TEST_CASE("propagation is unitary at the automatic step count", "[dynamics]") {
    const auto inst = generate_instance(4, 2023);
    for (DriverKind kind : {DriverKind::None, DriverKind::Antiferro}) {
        AnnealSpec spec;
        if (kind == DriverKind::Antiferro) spec.driver = Driver::antiferro();
        const auto res = propagate(inst, spec);
        CHECK(res.norm_drift <= 1e-6);
        CHECK(res.drift_ok);
        CHECK(res.final_state.norm() == Approx(1.0).margin(2e-6));
        CHECK(res.success_probability >= 0.0);
        CHECK(res.success_probability <= 1.0 + 1e-9);
    }
}

TEST_CASE("final states match the dense-exponential oracle", "[dynamics]") {
    // the oracle steps with exact matrix exponentials of the midpoint
    // Hamiltonian at ten times the integrator resolution
    for (const auto [n, seed] : {std::pair{2, 4ull}, {3, 9ull}, {4, 12ull}}) {
        const auto inst = generate_instance(n, seed);
        for (DriverKind kind : {DriverKind::None, DriverKind::Ferro, DriverKind::Mixed}) {
            AnnealSpec spec;
            if (kind == DriverKind::Ferro) spec.driver = Driver::ferro();
            if (kind == DriverKind::Mixed) spec.driver = Driver::mixed(n, seed + 1);
            const auto res = propagate(inst, spec);
            const auto oracle = oracles::expm_midpoint_propagate(inst, spec, 10 * res.steps);
            CHECK(oracles::fidelity(oracle, res.final_state) >= 1.0 - 1e-6);
        }
    }
}

TEST_CASE("driver-free schedule equals the original annealing form", "[dynamics]") {
    // with b = 0 the coupled-driver schedule reduces to (1-tau) H_B + tau H_P
    const auto inst = generate_instance(3, 77);
    AnnealSpec none;
    AnnealSpec zeroed;
    zeroed.driver = Driver::ferro();
    zeroed.lambda = 0.0;
    const auto a = propagate(inst, none, 4000);
    const auto b = propagate(inst, zeroed, 4000);
    for (std::uint64_t k = 0; k < a.final_state.dim(); ++k)
        CHECK(a.final_state.amp[k] == b.final_state.amp[k]);
}

TEST_CASE("gross under-resolution is flagged, not hidden", "[dynamics]") {
    const auto inst = generate_instance(4, 5);
    AnnealSpec spec;

    PropagateOptions opt;
    opt.steps = 1;
    opt.drift_policy = DriftPolicy::Flag;
    const auto res = propagate(inst, spec, opt);
    CHECK_FALSE(res.drift_ok);
    CHECK(res.norm_drift > 1e-3);

    opt.drift_policy = DriftPolicy::Throw;
    CHECK_THROWS_AS(propagate(inst, spec, opt), ConvergenceError);
}

TEST_CASE("convergence study certifies the default resolution", "[dynamics]") {
    const auto inst = generate_instance(8, 88);
    AnnealSpec spec;
    spec.driver = Driver::ferro();
    const std::int64_t s0 = auto_steps(Hamiltonian(inst, spec));

    const auto rows = convergence_study(inst, spec, {s0, 2 * s0});
    CHECK(rows[0].norm_drift <= 1e-6);
    CHECK(rows[1].norm_drift <= rows[0].norm_drift);
    CHECK(std::abs(rows[1].success_probability - rows[0].success_probability) < 1e-6);

    CHECK_THROWS_AS(convergence_study(inst, spec, {100, 100}), std::invalid_argument);
}

TEST_CASE("norm loss shrinks at the integrator's order", "[dynamics]") {
    const auto inst = generate_instance(4, 41);
    AnnealSpec spec;
    spec.driver = Driver::antiferro();
    spec.T = 5.0;

    const auto rows = convergence_study(inst, spec, {200, 400, 800, 1600});
    for (std::size_t i = 1; i < rows.size(); ++i)
        CHECK(rows[i].norm_drift < rows[i - 1].norm_drift);

    // least-squares slope of log drift vs log steps: RK4's norm loss decays
    // at least at fourth order (the step-wise loss scales one power faster)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : rows) {
        const double x = std::log(static_cast<double>(r.steps));
        const double y = std::log(r.norm_drift);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double m = rows.size();
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    CHECK(slope < -4.0);
}

TEST_CASE("adiabatic limit reaches the ground state on a gapped instance", "[dynamics]") {
    // pick a seed whose dense-scan minimum gap is comfortably open
    AnnealSpec spec;
    spec.T = 1000.0;
    ProblemInstance inst;
    bool found = false;
    for (std::uint64_t seed = 1; seed <= 50 && !found; ++seed) {
        inst = generate_instance(4, seed);
        const auto [gap, tau] = oracles::scan_min_gap(inst, spec, 101);
        if (gap > 0.25 && brute_force_ground(inst).degeneracy == 1) found = true;
    }
    REQUIRE(found);
    const auto res = propagate(inst, spec);
    CHECK(res.success_probability >= 0.99);
}

TEST_CASE("state trace reports the schedule endpoints", "[dynamics]") {
    const auto inst = generate_instance(3, 3);
    AnnealSpec spec;
    spec.T = 10.0;

    struct Row {
        double tau, norm, energy;
    };
    std::vector<Row> rows;
    PropagateOptions opt;
    opt.steps = 2000;
    opt.trace_every = 500;
    opt.trace_sink = [&](double tau, double norm, double energy) {
        rows.push_back({tau, norm, energy});
    };
    propagate(inst, spec, opt);

    REQUIRE(rows.size() == 5);
    CHECK(rows.front().tau == 0.0);
    CHECK(rows.back().tau == 1.0);
    CHECK(rows.front().energy == Approx(-3.0).margin(1e-12));
    for (const auto& r : rows) CHECK(r.norm == Approx(1.0).margin(1e-6));
}
