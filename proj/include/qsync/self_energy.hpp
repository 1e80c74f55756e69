#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "qsync/types.hpp"

namespace qsync {

using Mat2 = Eigen::Matrix2cd;

/// Retarded and Keldysh self-energy matrices at one frequency.
struct SelfEnergyEval {
    Mat2 PiR;
    Mat2 PiK;
};

/// Frequency-independent self-energies of two Stuart-Landau oscillators with
/// dissipative coupling D:
///   PiR = -(i/2) [[D-g1, D], [D, D-g1]],  PiK = -i [[D+g1, D], [D, D+g1]].
struct MarkovianPair {
    double gamma1 = 1.0;
    double D = 0.1;
};

/// Minimal Lorentz-model gain medium: Im PiR_11 has a positive peak of height
/// `gain_strength` at `omega_ex` with half-width `width`, on top of a flat
/// background loss. The cross coupling follows the PiR_12 ~ -PiR_11 pattern of
/// a shared resonant bath. PiK is tied to the decomposition gain + loss so
/// that i*PiK is positive semidefinite for every frequency.
struct LorentzianGain {
    double omega_ex = 1.0;
    double width = 0.05;
    double gain_strength = 0.005;    // peak of Im PiR_11 above background
    double background_loss = 0.004;  // local loss rate per oscillator
    double cross_sign = 1.0;         // +1 enforces PiR_12 ~ -PiR_11
    double kappa_extra = 0.0;        // extra Keldysh noise floor
};

/// Self-energies sampled on a strictly increasing frequency grid, interpolated
/// with a monotone cubic (order 3) or linear (order 1) rule.
struct TabulatedSelfEnergy {
    std::vector<double> omega;
    std::vector<cd> PiR11, PiR12, PiK11, PiK12;
    int order = 3;
    double fd_step_factor = 0.5;  // derivative step as fraction of local spacing
};

namespace detail {
struct TabulatedInterp;
}

class SelfEnergyModel {
  public:
    using Variant = std::variant<MarkovianPair, LorentzianGain, TabulatedSelfEnergy>;

    SelfEnergyModel(MarkovianPair m) : v_(m) { validate(); }
    SelfEnergyModel(LorentzianGain m) : v_(m) { validate(); }
    SelfEnergyModel(TabulatedSelfEnergy m);

    /// PiR(omega), PiK(omega). Checks the model invariants (symmetric entries,
    /// i*PiK Hermitian PSD) on the returned matrices.
    SelfEnergyEval eval(double omega) const;

    /// d/domega PiR: analytic for the Markovian and Lorentzian variants,
    /// central finite difference for tabulated data.
    Mat2 derivative(double omega) const;

    bool is_markovian() const { return std::holds_alternative<MarkovianPair>(v_); }
    const Variant& variant() const { return v_; }

    /// Frequency window where the model is defined (tabulated range, or a
    /// few widths around the resonance; unbounded for Markovian).
    std::pair<double, double> frequency_window() const;

    static SelfEnergyModel from_csv(const std::string& path, int order = 3);

  private:
    void validate() const;
    Variant v_;
    std::shared_ptr<const detail::TabulatedInterp> interp_;  // tabulated variant only
};

/// Noise correlation matrix C and its lower-triangular factor B (B B^dag = C)
/// for the Langevin equation, with the phase factors frozen at the saddle
/// value theta0. r1, r2 are the limit-cycle radii.
struct NoiseMatrices {
    Mat2 C;
    Mat2 B;
};

NoiseMatrices noise_matrix(const SelfEnergyModel& model, double nu, double r1, double r2,
                           double theta0, const QuarticCouplings& couplings);

/// Validates i*PiK Hermitian with eigenvalues >= -1e-12 * norm and the
/// symmetric-oscillator structure; throws InvalidModel otherwise.
void check_self_energy_invariants(const SelfEnergyEval& se);

}  // namespace qsync
