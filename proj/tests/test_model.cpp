#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "qsync/rng.hpp"
#include "qsync/saddle.hpp"
#include "qsync/self_energy.hpp"

using namespace qsync;

namespace {

// closed-form resonant term used to manufacture tabulated data
cd lorentz_ref(double g, double w0, double G, double w) {
    return -g * G / cd{w - w0, G};
}

TabulatedSelfEnergy make_table(double g, double w0, double G, double kappa, int n,
                               double span) {
    TabulatedSelfEnergy tab;
    for (int i = 0; i < n; ++i) {
        const double w = w0 - span + 2.0 * span * i / (n - 1);
        const cd res = lorentz_ref(g, w0, G, w);
        tab.omega.push_back(w);
        tab.PiR11.push_back(cd{0.0, -0.5 * kappa} + res);
        tab.PiR12.push_back(-res);
        tab.PiK11.push_back(-I * (2.0 * res.imag() + kappa));
        tab.PiK12.push_back(I * (2.0 * res.imag()));
    }
    return tab;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("markovian pair reproduces the constant self-energy matrices") {
    SelfEnergyModel model(MarkovianPair{1.0, 0.1});
    for (double w : {-3.0, 0.0, 1.7}) {
        const auto se = model.eval(w);
        CHECK(se.PiR(0, 0) == cd{0.0, 0.45});   // -(i/2)(D - g1) = -(i/2)(-0.9)
        CHECK(se.PiR(0, 1) == cd{0.0, -0.05});  // -(i/2) D
        CHECK(se.PiK(0, 0) == cd{0.0, -1.1});   // -i (D + g1)
        CHECK(se.PiK(0, 1) == cd{0.0, -0.1});   // -i D
        CHECK(se.PiR(1, 0) == se.PiR(0, 1));
        CHECK(se.PiK(1, 1) == se.PiK(0, 0));
    }
    CHECK(model.derivative(0.3).norm() == 0.0);
}

TEST_CASE("lorentzian gain peaks at omega_ex and dies in the tails") {
    LorentzianGain lg;
    lg.omega_ex = 1.0;
    lg.width = 0.05;
    lg.gain_strength = 0.01;
    lg.background_loss = 0.002;
    SelfEnergyModel model(lg);

    const auto peak = model.eval(1.0);
    CHECK(peak.PiR(0, 0).imag() == doctest::Approx(0.01 - 0.001));  // gain minus kappa/2
    CHECK(peak.PiR(0, 0).real() == doctest::Approx(0.0));

    // far tails: only the background survives
    const auto tail = model.eval(1.0 + 19.0 * lg.width);
    CHECK(std::abs(tail.PiR(0, 0) - cd{0.0, -0.001}) < 0.01 * lg.gain_strength * 60.0);
    CHECK(std::abs(tail.PiR(0, 0).imag() + 0.001) < lg.gain_strength / 300.0);

    // symmetric peak: Im d/dw PiR11 vanishes at resonance
    CHECK(model.derivative(1.0)(0, 0).imag() == doctest::Approx(0.0).epsilon(1e-12));

    // off-diagonal follows the -PiR11 resonant pattern
    CHECK(peak.PiR(0, 1).imag() == doctest::Approx(-0.01));
}

TEST_CASE("tabulated model is exact at nodes and continuous between them") {
    const auto tab = make_table(0.01, 1.0, 0.05, 0.002, 101, 0.5);
    SelfEnergyModel model(tab);
    for (std::size_t i : {std::size_t{0}, std::size_t{37}, std::size_t{100}}) {
        const auto se = model.eval(tab.omega[i]);
        CHECK(se.PiR(0, 0) == tab.PiR11[i]);  // bit-exact at nodes
        CHECK(se.PiK(0, 1) == tab.PiK12[i]);
    }
    // continuity across a node
    const double wn = tab.omega[50];
    const auto lo = model.eval(wn - 1e-9);
    const auto hi = model.eval(wn + 1e-9);
    CHECK(std::abs(lo.PiR(0, 0) - hi.PiR(0, 0)) < 1e-7);
}

TEST_CASE("tabulated derivative matches the analytic lorentzian to 1e-4") {
    const double g = 0.01, w0 = 1.0, G = 0.05;
    const auto tab = make_table(g, w0, G, 0.002, 2001, 0.5);
    SelfEnergyModel model(tab);
    for (double w : {0.8, 0.95, 1.0, 1.03, 1.2}) {
        const cd ref = g * G / (cd{w - w0, G} * cd{w - w0, G});  // d/dw of the resonant term
        const cd got = model.derivative(w)(0, 0);
        CHECK(std::abs(got - ref) / std::abs(ref) < 1e-4);
    }
}

TEST_CASE("tabulated range errors") {
    const auto tab = make_table(0.01, 1.0, 0.05, 0.002, 51, 0.3);
    SelfEnergyModel model(tab);
    CHECK_THROWS_AS((void)model.eval(0.5), Error);
    CHECK_THROWS_AS((void)model.derivative(0.7), Error);  // stencil leaves the grid
}

TEST_CASE("csv ingest round trip") {
    const auto tab = make_table(0.02, 1.0, 0.1, 0.004, 41, 0.4);
    const auto path = std::filesystem::temp_directory_path() / "qsync_test_selfenergy.csv";
    {
        std::ofstream out(path);
        out << "omega,Re_PiR_11,Im_PiR_11,Re_PiR_12,Im_PiR_12,Re_PiK_11,Im_PiK_11,Re_PiK_12,"
               "Im_PiK_12\n";
        for (std::size_t i = 0; i < tab.omega.size(); ++i) {
            char buf[512];
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          tab.omega[i], tab.PiR11[i].real(), tab.PiR11[i].imag(),
                          tab.PiR12[i].real(), tab.PiR12[i].imag(), tab.PiK11[i].real(),
                          tab.PiK11[i].imag(), tab.PiK12[i].real(), tab.PiK12[i].imag());
            out << buf;
        }
    }
    const SelfEnergyModel model = SelfEnergyModel::from_csv(path.string());
    const auto se = model.eval(tab.omega[20]);
    CHECK(std::abs(se.PiR(0, 0) - tab.PiR11[20]) < 1e-15);
    std::filesystem::remove(path);
}

TEST_CASE("self-energy invariants hold across variants and frequencies") {
    std::vector<SelfEnergyModel> models;
    models.emplace_back(MarkovianPair{1.0, 0.3});
    models.emplace_back(LorentzianGain{1.0, 0.05, 0.01, 0.002, 1.0, 0.001});
    models.emplace_back(make_table(0.01, 1.0, 0.05, 0.002, 201, 0.4));
    Rng rng(7);
    for (const auto& m : models) {
        auto [lo, hi] = m.frequency_window();
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 2.0;
        }
        // keep clear of the edges so derivative stencils stay inside
        for (int k = 0; k < 40; ++k) {
            const double w = lo + (hi - lo) * (0.05 + 0.9 * rng.uniform());
            CHECK_NOTHROW(check_self_energy_invariants(m.eval(w)));
        }
    }
}

TEST_CASE("noise matrix at the markovian saddle matches the closed form") {
    const PairParams p{1.0, 1.0, 1.0, 0.1, 0.1};  // Delta = 0
    const auto sol = solve_pair_markovian(p);
    SelfEnergyModel model(MarkovianPair{p.gamma1, p.D});
    const auto nm = noise_matrix(model, sol.nu, sol.r1, sol.r2, sol.theta0,
                                 QuarticCouplings::stuart_landau(p.gamma2));
    const double r2 = sol.r1 * sol.r1;
    const double ct = std::cos(sol.theta0);
    // C = (1/r^2) [[3 g1 - 2 D c - D, D c], [D c, 3 g1 - 2 D c - D]]
    CHECK(nm.C(0, 0).real() ==
          doctest::Approx((3.0 * p.gamma1 - 2.0 * p.D * ct - p.D) / r2).epsilon(1e-12));
    CHECK(nm.C(0, 1).real() == doctest::Approx(p.D * ct / r2).epsilon(1e-12));
    CHECK(nm.C(0, 1).imag() == doctest::Approx(0.0));
}

TEST_CASE("diagonal noise matrix factors as elementwise square roots") {
    const PairParams p{1.0, 1.0, 1.0, 0.1, 0.0};  // D = 0
    SelfEnergyModel model(MarkovianPair{p.gamma1, p.D});
    const auto nm = noise_matrix(model, 1.0, std::sqrt(10.0), std::sqrt(10.0), PI,
                                 QuarticCouplings::stuart_landau(p.gamma2));
    CHECK(nm.C(0, 1) == cd{0.0, 0.0});
    CHECK(nm.B(0, 0).real() == doctest::Approx(std::sqrt(nm.C(0, 0).real())));
    CHECK(nm.B(1, 0) == cd{0.0, 0.0});
    CHECK(nm.B(1, 1).real() == doctest::Approx(std::sqrt(nm.C(1, 1).real())));
}

TEST_CASE("cholesky factor reconstructs C for random valid models") {
    Rng rng(42);
    for (int trial = 0; trial < 60; ++trial) {
        const double g1 = 0.5 + rng.uniform();
        const double D = rng.uniform() * 0.8 * g1;
        const double g2 = 0.02 + 0.2 * rng.uniform();
        const double r1 = 0.5 + 3.0 * rng.uniform();
        const double r2 = 0.5 + 3.0 * rng.uniform();
        const double th = -PI + 2.0 * PI * rng.uniform();
        SelfEnergyModel model = (trial % 2 == 0)
            ? SelfEnergyModel(MarkovianPair{g1, D})
            : SelfEnergyModel(LorentzianGain{1.0, 0.05, 0.01 * (0.5 + rng.uniform()),
                                             0.002, 1.0, 0.0});
        const double nu = (trial % 2 == 0) ? rng.uniform() : 1.0 + 0.02 * (rng.uniform() - 0.5);
        const auto nm = noise_matrix(model, nu, r1, r2, th,
                                     QuarticCouplings::stuart_landau(g2));
        CHECK((nm.B * nm.B.adjoint() - nm.C).norm() < 1e-12 * (1.0 + nm.C.norm()));
        CHECK(std::abs(nm.B(0, 1)) == 0.0);  // lower triangular
    }
}

}  // TEST_SUITE
