#include "qsync/sde.hpp"

#include <cmath>

#include "qsync/rng.hpp"

namespace qsync {

namespace {

long long step_count(double T, double dt) { return static_cast<long long>(std::floor(T / dt)); }

}  // namespace

Trajectory simulate_adler_with_noise(double Delta, double D, double sigma0_sq,
                                     double theta_init, double dt,
                                     std::span<const double> gaussians, int stride) {
    require(dt > 0.0, Errc::step_too_large, "simulate_adler", "dt must be positive");
    require(dt * std::max(std::abs(Delta) + D, 1.0) < 0.1, Errc::step_too_large,
            "simulate_adler", "dt too large for the drift scale");
    Trajectory traj;
    traj.kind = TrajectoryKind::adler;
    traj.dt = dt;
    traj.stride = stride;
    const long long n = static_cast<long long>(gaussians.size());
    const double amp = std::sqrt(2.0 * sigma0_sq * dt);
    double theta = theta_init;
    for (long long k = 0; k <= n; ++k) {
        if (k % stride == 0) {
            traj.times.push_back(k * dt);
            traj.theta1.push_back(theta);
        }
        if (k == n) break;
        theta += (Delta + D * std::sin(theta)) * dt + amp * gaussians[static_cast<std::size_t>(k)];
    }
    return traj;
}

Trajectory simulate_adler(double Delta, double D, double sigma0_sq, double theta_init,
                          double dt, double T, std::uint64_t seed, int stride) {
    require(dt > 0.0, Errc::step_too_large, "simulate_adler", "dt must be positive");
    require(dt * std::max(std::abs(Delta) + D, 1.0) < 0.1, Errc::step_too_large,
            "simulate_adler", "dt too large for the drift scale");
    Trajectory traj;
    traj.kind = TrajectoryKind::adler;
    traj.dt = dt;
    traj.stride = stride;
    traj.seed = seed;
    Rng rng(seed);
    const long long n = step_count(T, dt);
    const double amp = std::sqrt(2.0 * sigma0_sq * dt);
    double theta = theta_init;
    for (long long k = 0; k <= n; ++k) {
        if (k % stride == 0) {
            traj.times.push_back(k * dt);
            traj.theta1.push_back(theta);
        }
        if (k == n) break;
        theta += (Delta + D * std::sin(theta)) * dt + amp * rng.normal();
    }
    return traj;
}

Trajectory simulate_single_sl(const SingleOscillatorParams& params, double dt, double T,
                              std::uint64_t seed, int stride, double eta_init,
                              double theta_init) {
    require(dt > 0.0 && dt * params.gamma1 < 0.1, Errc::step_too_large, "simulate_single_sl",
            "dt too large for the radial relaxation rate");
    Trajectory traj;
    traj.kind = TrajectoryKind::single_sl;
    traj.dt = dt;
    traj.stride = stride;
    traj.seed = seed;
    Rng rng(seed);
    const long long n = step_count(T, dt);
    const double intensity = 1.5 * params.gamma2;  // per quadrature
    const double amp = std::sqrt(intensity * dt);
    double theta = theta_init, eta = eta_init;
    for (long long k = 0; k <= n; ++k) {
        if (k % stride == 0) {
            traj.times.push_back(k * dt);
            traj.theta1.push_back(theta);
            traj.eta1.push_back(eta);
        }
        if (k == n) break;
        theta += amp * rng.normal();
        eta += -params.gamma1 * eta * dt + amp * rng.normal();
    }
    return traj;
}

Trajectory simulate_pair_nonmarkovian(const SelfEnergyModel& model, const SaddleSolution& sol,
                                      const QuarticCouplings& couplings, double dt, double T,
                                      std::uint64_t seed, const PairSimOptions& opts) {
    require(sol.branch == Branch::synchronized, Errc::invalid_model,
            "simulate_pair_nonmarkovian", "needs a synchronized saddle solution");

    const Mat2 PiR = model.eval(sol.nu).PiR;
    const Mat2 dPiR = model.derivative(sol.nu);
    const double w[2] = {sol.omega1, sol.omega2};
    const double r[2] = {sol.r1, sol.r2};

    Mat2 P, A;
    for (int m = 0; m < 2; ++m)
        for (int n = 0; n < 2; ++n) {
            const double weight = r[n] / r[m];
            P(m, n) = (m == n ? cd{sol.nu - w[n], 0.0} : cd{0.0, 0.0}) - PiR(m, n) * weight;
            A(m, n) = I * ((m == n ? 1.0 : 0.0) - dPiR(m, n) * weight);
        }
    const cd det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    require(std::abs(det) > 1e-8 * (A.norm() * A.norm() + 1e-300), Errc::singular_friction,
            "simulate_pair_nonmarkovian", "friction matrix is numerically singular");
    Mat2 Ainv;
    Ainv << A(1, 1), -A(0, 1), -A(1, 0), A(0, 0);
    Ainv /= det;

    const Mat2 B0 = noise_matrix(model, sol.nu, sol.r1, sol.r2, sol.theta0, couplings).B;
    const Mat2 N0 = Ainv * B0 * opts.noise_scale;

    // step-size guard against the fastest deterministic rate
    const double rate_scale =
        (Ainv * P).cwiseAbs().maxCoeff() + std::abs(couplings.lambda1) *
            std::max(sol.r1 * sol.r1, sol.r2 * sol.r2) * Ainv.cwiseAbs().maxCoeff();
    require(dt * rate_scale < 0.1, Errc::step_too_large, "simulate_pair_nonmarkovian",
            "dt too large for the drift scale");

    Trajectory traj;
    traj.kind = TrajectoryKind::pair;
    traj.dt = dt;
    traj.stride = opts.stride;
    traj.seed = seed;
    Rng rng(seed);
    const long long n = step_count(T, dt);
    const double sdt = std::sqrt(dt);

    Eigen::Vector2cd phi{std::exp(-I * (sol.theta0 / 2.0)), std::exp(I * (sol.theta0 / 2.0))};
    if (opts.perturbation != 0.0) {
        phi(0) *= (1.0 + opts.perturbation) * std::exp(I * opts.perturbation);
        phi(1) *= (1.0 - 0.5 * opts.perturbation);
    }
    double theta[2] = {-std::arg(phi(0)), -std::arg(phi(1))};
    double prev_arg[2] = {std::arg(phi(0)), std::arg(phi(1))};

    auto record = [&](long long k) {
        traj.times.push_back(k * dt);
        traj.theta1.push_back(theta[0]);
        traj.theta2.push_back(theta[1]);
        traj.eta1.push_back(std::abs(phi(0)) - 1.0);
        traj.eta2.push_back(std::abs(phi(1)) - 1.0);
        if (opts.store_phi) {
            traj.phi1.push_back(phi(0));
            traj.phi2.push_back(phi(1));
        }
    };

    for (long long k = 0; k <= n; ++k) {
        if (k % opts.stride == 0) record(k);
        if (k == n) break;

        Eigen::Vector2cd drift = -P * phi;
        for (int m = 0; m < 2; ++m)
            drift(m) += r[m] * r[m] * couplings.lambda1 * std::conj(phi(m)) * phi(m) * phi(m);
        drift = Ainv * drift;

        Eigen::Vector2cd noise{rng.complex_normal(), rng.complex_normal()};
        if (opts.multiplicative_noise) {
            const double r1i = sol.r1 * std::abs(phi(0));
            const double r2i = sol.r2 * std::abs(phi(1));
            const double th_inst = wrap_angle(-std::arg(phi(0)) + std::arg(phi(1)));
            const Mat2 Bi =
                noise_matrix(model, sol.nu, r1i, r2i, th_inst, couplings).B;
            noise = (Ainv * Bi * opts.noise_scale) * noise;
        } else {
            noise = N0 * noise;
        }
        phi += drift * dt + noise * sdt;

        for (int m = 0; m < 2; ++m) {
            const double a = std::arg(phi(m));
            theta[m] += -wrap_angle(a - prev_arg[m]);
            prev_arg[m] = a;
        }
    }
    return traj;
}

AutocorrelationTable autocorrelation(std::span<const Trajectory> trajectories, double tau_max,
                                     double burn_in_fraction) {
    require(!trajectories.empty(), Errc::insufficient_data, "autocorrelation",
            "no trajectories given");
    const Trajectory& first = trajectories.front();
    require(!first.phi1.empty(), Errc::insufficient_data, "autocorrelation",
            "trajectories lack stored complex fields (store_phi)");
    const double T = first.times.back();
    require(tau_max <= 0.25 * T, Errc::insufficient_length, "autocorrelation",
            "tau_max exceeds a quarter of the record length");

    const double sample_dt = first.dt * first.stride;
    const std::size_t burn = static_cast<std::size_t>(burn_in_fraction * first.n_samples());
    const std::size_t n_lag = static_cast<std::size_t>(tau_max / sample_dt) + 1;

    AutocorrelationTable tab;
    tab.tau.resize(n_lag);
    tab.c.assign(n_lag, {cd{}, cd{}, cd{}, cd{}});
    for (std::size_t l = 0; l < n_lag; ++l) tab.tau[l] = l * sample_dt;

    for (const Trajectory& tr : trajectories) {
        require(tr.phi1.size() == first.phi1.size(), Errc::insufficient_data,
                "autocorrelation", "trajectories have mismatched lengths");
        const std::size_t K = tr.phi1.size();
        const cd* phis[2] = {tr.phi1.data(), tr.phi2.data()};
        for (std::size_t l = 0; l < n_lag; ++l) {
            cd acc[4] = {};
            const std::size_t kmax = K - l;
            for (std::size_t k = burn; k < kmax; ++k) {
                for (int m = 0; m < 2; ++m)
                    for (int nn = 0; nn < 2; ++nn)
                        acc[2 * m + nn] += std::conj(phis[m][k]) * phis[nn][k + l];
            }
            const double norm = static_cast<double>(kmax - burn);
            for (int q = 0; q < 4; ++q) tab.c[l][q] += acc[q] / norm;
        }
    }
    for (auto& row : tab.c)
        for (auto& v : row) v /= static_cast<double>(trajectories.size());
    return tab;
}

}  // namespace qsync
