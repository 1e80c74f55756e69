#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "qsync/diffusion.hpp"
#include "qsync/ensemble.hpp"
#include "qsync/rng.hpp"
#include "qsync/sde.hpp"

using namespace qsync;

TEST_SUITE("sde") {

TEST_CASE("noiseless adler stays at the fixed point") {
    const auto tr = simulate_adler(0.0, 0.1, 0.0, PI, 1e-3, 10.0, 1);
    for (double th : tr.theta1) CHECK(th == doctest::Approx(PI));
}

TEST_CASE("noiseless adler winds at the classical rate above the tongue") {
    // period 2 pi / sqrt(Delta^2 - D^2) by direct integration of the drift
    const double D = 0.1, Delta = 2.0 * D;
    const auto tr = simulate_adler(Delta, D, 0.0, 0.0, 5e-4, 4000.0, 1, 100);
    const double rate = (tr.theta1.back() - tr.theta1.front()) / tr.times.back();
    CHECK(rate == doctest::Approx(D * std::sqrt(3.0)).epsilon(2e-3));
}

TEST_CASE("free brownian variance grows at 2 s t") {
    const double s = 0.07;
    AdlerSpec spec;
    spec.Delta = 0.0;
    spec.D = 0.0;
    spec.sigma0_sq = s;
    spec.theta_init = 0.0;
    spec.dt = 1e-3;
    spec.T = 50.0;
    EnsembleOptions opts;
    opts.n_traj = 1000;
    opts.master_seed = 11;
    opts.stride = 50;
    const auto stats = run_ensemble(SimulationSpec{spec}, opts);
    FitOptions fopts;
    fopts.burn_in_fraction = 0.0;
    fopts.window_fraction = 1.0;
    const auto fit = fit_diffusion(stats, "theta_minus", fopts);
    const double se = (fit.ci_high - fit.ci_low) / 3.92;
    CHECK(std::abs(fit.sigma_sq - s) < 3.0 * se);
    CHECK(fit.sigma_sq == doctest::Approx(s).epsilon(0.15));
}

TEST_CASE("step too large is rejected") {
    CHECK_THROWS_AS((void)simulate_adler(0.0, 0.1, 0.1, 0.0, 0.2, 1.0, 1), Error);
    CHECK_THROWS_AS((void)simulate_single_sl({1.0, 1.0, 0.1}, 0.2, 1.0, 1), Error);
}

TEST_CASE("single oscillator radial variance and phase diffusion") {
    SingleSlSpec spec;
    spec.params = {1.0, 1.0, 0.1};
    spec.dt = 1e-3;
    spec.T = 120.0;
    EnsembleOptions opts;
    opts.n_traj = 400;
    opts.master_seed = 5;
    opts.stride = 40;
    const auto stats = run_ensemble(SimulationSpec{spec}, opts);

    // <eta^2> = 3 g2 / (4 g1) = 0.075 in steady state (time-average late half)
    const auto& eta = stats.channel("eta");
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = stats.times.size() / 2; i < stats.times.size(); ++i) {
        acc += eta.var[i] + eta.mean[i] * eta.mean[i];
        ++cnt;
    }
    CHECK(acc / cnt == doctest::Approx(0.075).epsilon(0.05));

    // Var theta = 2 (3 g2 / 4) t
    FitOptions fopts;
    fopts.burn_in_fraction = 0.0;
    fopts.window_fraction = 1.0;
    const auto fit = fit_diffusion(stats, "theta", fopts);
    CHECK(fit.sigma_sq == doctest::Approx(0.075).epsilon(0.12));
}

TEST_CASE("noiseless single oscillator relaxes exponentially") {
    const auto tr = simulate_single_sl({1.0, 1.0, 0.0}, 1e-3, 5.0, 3, 1, 0.2, 0.4);
    CHECK(tr.eta1.front() == doctest::Approx(0.2));
    for (std::size_t i = 0; i < tr.times.size(); i += 500) {
        CHECK(tr.eta1[i] == doctest::Approx(0.2 * std::exp(-tr.times[i])).epsilon(2e-3));
        CHECK(tr.theta1[i] == 0.4);  // frozen phase
    }
}

TEST_CASE("deterministic pair flow relaxes back to the saddle") {
    const PairParams p{1.0 + 0.005, 1.0 - 0.005, 1.0, 0.1, 0.1};
    const auto sol = solve_pair_markovian(p);
    SelfEnergyModel model(MarkovianPair{p.gamma1, p.D});
    PairSimOptions popts;
    popts.noise_scale = 0.0;
    popts.perturbation = 0.08;
    popts.stride = 100;
    const auto tr = simulate_pair_nonmarkovian(model, sol, QuarticCouplings::stuart_landau(0.1),
                                               1e-3, 250.0, 9, popts);
    CHECK(std::abs(tr.eta1.back()) < 1e-6);
    CHECK(std::abs(tr.eta2.back()) < 1e-6);
    const double th_diff = tr.theta1.back() - tr.theta2.back();
    CHECK(std::abs(wrap_angle(th_diff - sol.theta0)) < 1e-6);
}

TEST_CASE("wrap then unwrap is the identity for small increments") {
    const auto tr = simulate_adler(0.05, 0.1, 0.08, 0.3, 1e-3, 20.0, 21);
    std::vector<double> wrapped(tr.theta1.size());
    for (std::size_t i = 0; i < wrapped.size(); ++i) wrapped[i] = wrap_angle(tr.theta1[i]);
    // rebuild the unwrapped path from the wrapped samples
    double acc = tr.theta1.front();
    for (std::size_t i = 1; i < wrapped.size(); ++i) {
        acc += wrap_angle(wrapped[i] - wrapped[i - 1]);
        CHECK(acc == doctest::Approx(tr.theta1[i]).epsilon(1e-9));
    }
}

TEST_CASE("ensemble statistics are schedule independent") {
    AdlerSpec spec;
    spec.Delta = 0.013;
    spec.D = 0.1;
    spec.sigma0_sq = 0.16;
    spec.dt = 1e-3;
    spec.T = 20.0;
    EnsembleOptions serial_opts;
    serial_opts.n_traj = 150;
    serial_opts.master_seed = 77;
    serial_opts.stride = 20;
    EnsembleOptions par_opts = serial_opts;
    par_opts.threads = 4;
    const auto a = run_ensemble_serial(SimulationSpec{spec}, serial_opts);
    const auto b = run_ensemble(SimulationSpec{spec}, par_opts);
    REQUIRE(a.times.size() == b.times.size());
    const auto& am = a.channel("theta_minus");
    const auto& bm = b.channel("theta_minus");
    CHECK(std::memcmp(am.mean.data(), bm.mean.data(), am.mean.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(am.var.data(), bm.var.data(), am.var.size() * sizeof(double)) == 0);
}

TEST_CASE("single-trajectory ensemble has zero variance") {
    AdlerSpec spec;
    spec.sigma0_sq = 0.1;
    spec.T = 5.0;
    EnsembleOptions opts;
    opts.n_traj = 1;
    opts.master_seed = 3;
    opts.stride = 10;
    const auto stats = run_ensemble(SimulationSpec{spec}, opts);
    for (double v : stats.channel("theta_minus").var) CHECK(v == 0.0);
}

TEST_CASE("step halving with a shared wiener path changes the fit by < 2%") {
    const double Delta = 0.013, D = 0.1, s0 = 0.16, dt = 2e-3;
    const int n_traj = 400;
    const long long n_fine = 100000;  // T = 100 at dt/2
    std::vector<double> fits(2, 0.0);
    for (int lvl = 0; lvl < 2; ++lvl) {
        std::vector<std::vector<double>> paths;
        std::vector<double> times;
        for (int j = 0; j < n_traj; ++j) {
            Rng rng(derive_seed(999, static_cast<std::uint64_t>(j)));
            std::vector<double> g(static_cast<std::size_t>(n_fine));
            for (auto& x : g) x = rng.normal();
            Trajectory tr;
            if (lvl == 0) {
                // sum gaussian pairs so both levels share the same wiener path
                std::vector<double> gc(g.size() / 2);
                const double inv = 1.0 / std::sqrt(2.0);
                for (std::size_t k = 0; k < gc.size(); ++k)
                    gc[k] = (g[2 * k] + g[2 * k + 1]) * inv;
                tr = simulate_adler_with_noise(Delta, D, s0, PI, dt, gc, 50);
            } else {
                tr = simulate_adler_with_noise(Delta, D, s0, PI, dt / 2, g, 100);
            }
            paths.push_back(tr.theta1);
            times = tr.times;
        }
        // OLS variance slope over the trailing 60%
        std::vector<double> var(times.size(), 0.0);
        for (std::size_t q = 0; q < times.size(); ++q) {
            double s = 0.0, s2 = 0.0;
            for (const auto& pth : paths) {
                s += pth[q];
                s2 += pth[q] * pth[q];
            }
            const double m = s / n_traj;
            var[q] = (s2 - n_traj * m * m) / (n_traj - 1);
        }
        const std::size_t q0 = times.size() * 2 / 5;
        double st = 0, sv = 0, stt = 0, stv = 0;
        const double nn = static_cast<double>(times.size() - q0);
        for (std::size_t q = q0; q < times.size(); ++q) {
            st += times[q];
            sv += var[q];
            stt += times[q] * times[q];
            stv += times[q] * var[q];
        }
        fits[static_cast<std::size_t>(lvl)] =
            0.5 * (nn * stv - st * sv) / (nn * stt - st * st);
    }
    CHECK(std::abs(fits[0] - fits[1]) / fits[1] < 0.02);
}

TEST_CASE("autocorrelation zero-lag diagonal exceeds one by the radial variance") {
    const PairParams p{1.0, 1.0, 1.0, 0.1, 0.1};
    const auto sol = solve_pair_markovian(p);
    SelfEnergyModel model(MarkovianPair{p.gamma1, p.D});
    PairSpec spec{model, sol, QuarticCouplings::stuart_landau(p.gamma2), PairSimOptions{}, 1e-3,
                  80.0};
    spec.sim.store_phi = true;
    EnsembleOptions opts;
    opts.n_traj = 24;
    opts.master_seed = 31;
    opts.stride = 20;
    const auto trs = run_trajectories(SimulationSpec{spec}, opts);
    const auto tab = autocorrelation(trs, 15.0, 0.25);

    // moment identity |phi|^2 = (1 + eta)^2 over the same sample window
    double phi2 = 0.0;
    std::size_t cnt = 0;
    const std::size_t burn = static_cast<std::size_t>(0.25 * trs.front().n_samples());
    for (const auto& tr : trs)
        for (std::size_t i = burn; i < tr.n_samples(); ++i) {
            phi2 += (1.0 + tr.eta1[i]) * (1.0 + tr.eta1[i]);
            ++cnt;
        }
    phi2 /= cnt;
    CHECK(tab.at(0, 0, 0).real() == doctest::Approx(phi2).epsilon(1e-10));
    CHECK(tab.at(0, 0, 0).real() > 0.95);  // radial spread stays near the cycle
    CHECK_THROWS_AS((void)autocorrelation(trs, 40.0, 0.25), Error);  // tau_max > T/4
}

TEST_CASE("white noise input decorrelates after the first lag") {
    Trajectory tr;
    tr.kind = TrajectoryKind::pair;
    tr.dt = 1.0;
    tr.stride = 1;
    Rng rng(17);
    for (int k = 0; k < 4000; ++k) {
        tr.times.push_back(k);
        tr.phi1.push_back(rng.complex_normal());
        tr.phi2.push_back(rng.complex_normal());
        tr.theta1.push_back(0.0);
        tr.theta2.push_back(0.0);
        tr.eta1.push_back(0.0);
        tr.eta2.push_back(0.0);
    }
    std::vector<Trajectory> trs{tr};
    const auto tab = autocorrelation(trs, 500.0, 0.0);
    CHECK(std::abs(tab.at(0, 0, 0)) == doctest::Approx(1.0).epsilon(0.1));
    CHECK(std::abs(tab.at(1, 0, 0)) < 0.05);
    CHECK(std::abs(tab.at(2, 1, 1)) < 0.05);
}

TEST_CASE("markovian pair and adler reduction share the increment law") {
    // two-sample KS on windowed theta_- increments, far enough from the deep
    // quantum regime that the radial channel is negligible
    const double g2 = 0.02, D = 0.1, Delta = 0.5 * D;
    const PairParams p{1.0 + Delta / 2, 1.0 - Delta / 2, 1.0, g2, D};
    const auto sol = solve_pair_markovian(p);
    SelfEnergyModel model(MarkovianPair{p.gamma1, p.D});
    const double s0 = noise_variances(p).sigma0_sq();

    EnsembleOptions opts;
    opts.n_traj = 200;
    opts.master_seed = 13;
    opts.stride = 100;

    PairSpec pair_spec{model, sol, QuarticCouplings::stuart_landau(g2), PairSimOptions{}, 1e-3,
                       160.0};
    const auto pair_trs = run_trajectories(SimulationSpec{pair_spec}, opts);

    AdlerSpec adler_spec;
    adler_spec.Delta = Delta;
    adler_spec.D = D;
    adler_spec.sigma0_sq = s0;
    adler_spec.theta_init = sol.theta0;
    adler_spec.dt = 1e-3;
    adler_spec.T = 160.0;
    EnsembleOptions aopts = opts;
    aopts.master_seed = 14;
    const auto adler_trs = run_trajectories(SimulationSpec{adler_spec}, aopts);

    auto increments = [](const std::vector<Trajectory>& trs, bool pair) {
        std::vector<double> out;
        const std::size_t gap = 25;  // 2.5 time units between samples
        for (const auto& tr : trs) {
            const std::size_t n = tr.n_samples();
            for (std::size_t i = n / 4; i + gap < n; i += gap) {
                const double a = pair ? tr.theta1[i] - tr.theta2[i] : tr.theta1[i];
                const double b =
                    pair ? tr.theta1[i + gap] - tr.theta2[i + gap] : tr.theta1[i + gap];
                out.push_back(b - a);
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    const auto xs = increments(pair_trs, true);
    const auto ys = increments(adler_trs, false);

    // two-sample KS statistic
    double ks = 0.0;
    std::size_t i = 0, j = 0;
    while (i < xs.size() && j < ys.size()) {
        if (xs[i] <= ys[j]) ++i;
        else ++j;
        ks = std::max(ks, std::abs(static_cast<double>(i) / xs.size() -
                                   static_cast<double>(j) / ys.size()));
    }
    const double n_eff = static_cast<double>(xs.size()) * ys.size() / (xs.size() + ys.size());
    // alpha = 0.01 critical value
    CHECK(ks < 1.628 / std::sqrt(n_eff));
}

}  // TEST_SUITE
