#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qsync/saddle.hpp"
#include "qsync/self_energy.hpp"
#include "qsync/types.hpp"

namespace qsync {

enum class TrajectoryKind { adler, single_sl, pair };

/// One seeded sample path. Phases are stored unwrapped. For the scalar
/// systems only the first channel(s) are filled: adler stores theta_- in
/// theta1; single_sl stores theta in theta1 and eta in eta1.
struct Trajectory {
    TrajectoryKind kind = TrajectoryKind::adler;
    double dt = 0.0;
    int stride = 1;
    std::uint64_t seed = 0;
    std::vector<double> times;
    std::vector<double> theta1, theta2;
    std::vector<double> eta1, eta2;
    std::vector<cd> phi1, phi2;  // pair simulator only, when requested

    std::size_t n_samples() const { return times.size(); }
};

/// Noisy Adler equation  thetadot = Delta + D sin(theta) + xi,
/// <xi(t) xi(t')> = 2 sigma0_sq delta(t-t'), Euler-Maruyama.
Trajectory simulate_adler(double Delta, double D, double sigma0_sq, double theta_init,
                          double dt, double T, std::uint64_t seed, int stride = 1);

/// Same drift, integrating against a caller-supplied standard-normal stream
/// (one draw per step). Used for common-random-number convergence studies.
Trajectory simulate_adler_with_noise(double Delta, double D, double sigma0_sq,
                                     double theta_init, double dt,
                                     std::span<const double> gaussians, int stride = 1);

/// Single Stuart-Landau oscillator fluctuations:
///   thetadot = Re xi, (d/dt + gamma1) eta = Im xi,
/// Re xi and Im xi independent with intensity 3 gamma2 / 2 each.
Trajectory simulate_single_sl(const SingleOscillatorParams& params, double dt, double T,
                              std::uint64_t seed, int stride = 1, double eta_init = 0.0,
                              double theta_init = 0.0);

struct PairSimOptions {
    int stride = 1;
    bool store_phi = false;
    bool multiplicative_noise = false;  // rebuild B from instantaneous |phi| and phases
    double noise_scale = 1.0;           // 0 disables noise (deterministic flow)
    double perturbation = 0.0;          // initial radial/phase kick off the saddle
};

/// Ito Euler-Maruyama integration of the matrix Langevin equation around a
/// synchronized saddle:
///   sum_n A_mn phidot_n = -sum_n P^R_mn(nu) phi_n + r_m^2 lambda1 conj(phi_m) phi_m^2
///                         + sum_n B_mn xi_n,
/// A = i (1 - dPiR/domega * r_n/r_m), <xi_m(t) conj(xi_n(t'))> = delta_mn delta(t-t').
/// Outputs theta_n = -arg phi_n (unwrapped) and eta_n = |phi_n| - 1.
Trajectory simulate_pair_nonmarkovian(const SelfEnergyModel& model, const SaddleSolution& sol,
                                      const QuarticCouplings& couplings, double dt, double T,
                                      std::uint64_t seed, const PairSimOptions& opts = {});

/// Time-averaged two-point function C_mn(tau) = <conj(phi_m(t)) phi_n(t+tau)>
/// over the stationary segment of an ensemble of pair trajectories.
struct AutocorrelationTable {
    std::vector<double> tau;
    std::vector<std::array<cd, 4>> c;  // row-major 2x2 per lag

    cd at(std::size_t lag, int m, int n) const { return c[lag][2 * m + n]; }
};

AutocorrelationTable autocorrelation(std::span<const Trajectory> trajectories, double tau_max,
                                     double burn_in_fraction = 0.2);

}  // namespace qsync
