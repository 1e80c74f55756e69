#pragma once

#include <optional>
#include <vector>

#include "qsync/self_energy.hpp"
#include "qsync/types.hpp"

namespace qsync {

enum class Branch { synchronized, unsynchronized };

/// Limit-cycle mean-field solution. For the unsynchronized branch the common
/// frequency and static phase do not exist; nu and theta0 are NaN and each
/// oscillator runs at its bare frequency.
struct SaddleSolution {
    double nu = 0.0;
    double r1 = 0.0;
    double r2 = 0.0;
    double theta0 = 0.0;  // in (-pi, pi]
    Branch branch = Branch::synchronized;
    double residual = 0.0;              // max |residual| of the defining equations
    std::vector<cd> stability;          // eigenvalues of the linearized drift
    double omega1 = 0.0, omega2 = 0.0;  // bare frequencies the solution belongs to
};

/// Single oscillator: nu = omega0, r = sqrt(gamma1/gamma2).
std::pair<double, double> solve_single(const SingleOscillatorParams& params,
                                       const QuarticCouplings& couplings);

/// Closed-form mean field of the dissipatively coupled pair.
/// |Delta| <= D: synchronized, nu = (w1+w2)/2, sin(theta0) = -Delta/D on the
/// stable branch (cos(theta0) < 0), r^2 = (g1 - D + D Re sqrt(1-Delta^2/D^2))/g2.
/// |Delta| > D: unsynchronized, r^2 = (g1 - D)/g2.
SaddleSolution solve_pair_markovian(const PairParams& params);

struct NonMarkovianSolveOptions {
    int nu_grid = 21;              // multi-start points across the search window
    double window_pad = 0.0;       // extra padding beyond [min w, max w]; 0 = auto
    int max_iterations = 200;
    double tolerance = 1e-12;      // Newton target on max residual modulus
    double accept_residual = 1e-9; // certificate threshold
};

/// All converged, deduplicated roots of the synchronized saddle equations
/// (stable or not), each with its stability spectrum filled in.
std::vector<SaddleSolution> solve_pair_nonmarkovian_all(
    const SelfEnergyModel& model, double omega1, double omega2,
    const QuarticCouplings& couplings, const NonMarkovianSolveOptions& opts = {});

/// The stable synchronized root (lowest nu among equally good ones), or
/// nullopt when no stable synchronized solution exists (NoSync).
std::optional<SaddleSolution> solve_pair_nonmarkovian(
    const SelfEnergyModel& model, double omega1, double omega2,
    const QuarticCouplings& couplings, const NonMarkovianSolveOptions& opts = {});

/// Eigenvalues of the real-linearized deterministic drift around a
/// synchronized saddle; exactly one should vanish (global-phase mode).
std::vector<cd> stability_of_saddle(const SaddleSolution& sol, const SelfEnergyModel& model,
                                    const QuarticCouplings& couplings);

/// Complex residuals of the synchronized saddle equations
///   nu - w_n - PiR11(nu) - e^{i s_n theta0} PiR12(nu) (r2/r1)^{s_n} - lambda1 r_n^2,
/// s_1 = -s_2 = 1.
std::array<cd, 2> saddle_residuals(const SelfEnergyModel& model, double omega1, double omega2,
                                   const QuarticCouplings& couplings, double nu, double theta0,
                                   double r1, double r2);

}  // namespace qsync
