#pragma once

#include <string>
#include <vector>

#include "qsync/types.hpp"

namespace qsync {

/// Normalized density on theta in [-pi, pi), sampled at cell centers
/// theta_i = -pi + (i + 1/2) * 2pi/n.
struct PhaseDistribution {
    std::vector<double> theta;
    std::vector<double> density;
    std::string method;

    int n_bins() const { return static_cast<int>(theta.size()); }
    double bin_width() const { return 2.0 * PI / theta.size(); }

    /// Normalize, clip values in [-1e-12, 0) to zero, verify non-negativity.
    void finalize(const std::string& op);
};

double l1_distance(const PhaseDistribution& a, const PhaseDistribution& b);
double linf_distance(const PhaseDistribution& a, const PhaseDistribution& b);
double peak_location(const PhaseDistribution& p);

/// Stationary density of  thetadot = Delta + D sin(theta) + xi,
/// <xi xi> = 2 sigma0_sq delta, from the Fourier three-term recursion closed
/// by a continued fraction. Internally doubles the harmonic count until the
/// density changes by < 1e-10 in the sup norm.
PhaseDistribution stationary_adler_cf(double Delta, double D, double sigma0_sq,
                                      int n_harmonics = 64, int n_bins = 256);

/// Independent oracle: finite-volume discretization with periodic boundary
/// and an unknown constant probability current, solved as one sparse system.
PhaseDistribution stationary_adler_grid(double Delta, double D, double sigma0_sq, int n_grid);

/// Free-diffusion Liouvillian branch lambda_l = 3 gamma2 l^2 / 4.
double liouvillian_branch(double gamma2, int l);

}  // namespace qsync
