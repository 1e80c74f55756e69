#pragma once

#include <span>

#include "qsync/ensemble.hpp"
#include "qsync/fokker_planck.hpp"
#include "qsync/types.hpp"

namespace qsync {

/// White-noise variances of the real Hubbard-Stratonovich fields driving
/// theta_+ and theta_-, from the saddle-frozen noise correlation matrix:
///   <xi_pm^2> = C11 +- Re C12 = g2 (3 g1 - D - (2 -+ 1) D cos t0) / (g1 - D - D cos t0),
/// cos t0 = -Re sqrt(1 - Delta^2/D^2) on the stable branch (0 outside the
/// tongue, where the saddle equations decouple).
struct NoiseVariances {
    double xi_plus_sq = 0.0;
    double xi_minus_sq = 0.0;

    double sigma0_sq() const { return 0.5 * xi_minus_sq; }
    double sigma_plus_sq() const { return 0.5 * xi_plus_sq; }
};

NoiseVariances noise_variances(const PairParams& params);

/// Effective long-time diffusion constant of  xdot = -V'(x) + noise(sigma0_sq)
/// with V(x) = -Delta x + D cos x, from the double-quadrature formula for
/// tilted periodic potentials. Relative quadrature error certified < 1e-6 by
/// grid doubling. If the barrier is too high for the result to be
/// representable, returns 0 with `underflowed` set.
struct SigmaMinusResult {
    double sigma_minus_sq = 0.0;
    bool underflowed = false;
};

SigmaMinusResult reimann_sigma_minus(double Delta, double D, double sigma0_sq);

/// OLS fit of Var(t) = 2 sigma^2 t over a late-time window, with a bootstrap
/// confidence interval resampled over trajectories.
struct DiffusionFit {
    double sigma_sq = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;

    double rel_ci_width() const {
        return (sigma_sq != 0.0) ? (ci_high - ci_low) / std::abs(2.0 * sigma_sq) : 1e300;
    }
};

struct FitOptions {
    double burn_in_fraction = 0.2;
    double window_fraction = 0.6;  // trailing fraction of the record used for the fit
    int n_bootstrap = 200;
    std::uint64_t bootstrap_seed = 12345;
};

DiffusionFit fit_diffusion(const EnsembleStats& stats, const std::string& channel,
                           const FitOptions& opts = {});

/// R^2 of the linear variance fit (free-diffusion quality check).
double variance_linearity_r2(const EnsembleStats& stats, const std::string& channel,
                             const FitOptions& opts = {});

/// Wrap theta_- samples (post burn-in) into [-pi, pi) and bin.
PhaseDistribution wrapped_histogram(std::span<const Trajectory> trajectories, int n_bins,
                                    double burn_in_fraction);

/// Synchronization-quality summary for one parameter point.
struct DiffusionReport {
    double sigma_minus_sq = 0.0;
    double sigma_plus_sq = 0.0;
    double sigma0_sq = 0.0;
    double ratio_minus_to_free = 0.0;  // sigma_-^2 / sigma_0^2
    double ratio_minus_to_plus = 0.0;  // sigma_-^2 / sigma_+^2
    double ci_low = 0.0, ci_high = 0.0;
    bool underflowed = false;
};

/// Quadrature-based report for the Markovian pair.
DiffusionReport diffusion_report(const PairParams& params);

}  // namespace qsync
