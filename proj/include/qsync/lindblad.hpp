#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "qsync/fokker_planck.hpp"
#include "qsync/types.hpp"

namespace qsync {

/// Two-mode Fock space truncated at `cutoff` states per mode.
struct FockSpace {
    int cutoff = 20;

    int hilbert_dim() const { return cutoff * cutoff; }
    long long liouville_dim() const {
        return static_cast<long long>(hilbert_dim()) * hilbert_dim();
    }
};

using SuperOp = Eigen::SparseMatrix<cd>;

/// Vectorized Liouvillian of two Stuart-Landau oscillators with dissipative
/// coupling, in the frame rotating at nu = (w1+w2)/2:
///   H = (Delta/2)(n1 - n2),
///   jumps sqrt(g1) a1^dag, sqrt(g1) a2^dag, sqrt(g2) a1^2, sqrt(g2) a2^2,
///         sqrt(D) (a1 + a2).
/// vec(rho) uses rho(ket, bra) column-major: index = ket + bra * dim.
/// Trace preservation holds exactly except on the cutoff boundary rows that
/// the truncated a^dag introduces.
SuperOp build_liouvillian(const PairParams& params, const FockSpace& space);

/// Fock-truncated two-mode state with the usual validity checks.
struct DensityMatrix {
    Eigen::MatrixXcd rho;
    int cutoff = 0;
    double residual = 0.0;  // |L rho| / (|L| |rho|) reported by the solver

    void validate(const std::string& op) const;

    /// Population of the boundary states (n1 = cutoff-1 or n2 = cutoff-1).
    double boundary_population() const;

    double mean_photon_number(int mode) const;
    std::vector<double> photon_number_distribution(int mode) const;
};

enum class SteadyStateMethod { null_space, propagation };

/// Steady state of the Liouvillian. `null_space` restricts to the conserved
/// photon-number-difference sector (ket total minus bra total), replaces one
/// row with the trace condition and solves the sparse system directly;
/// `propagation` marches the full vectorized state with RK4 short-time steps
/// until the residual target is met.
DensityMatrix steady_state(const SuperOp& L, const FockSpace& space,
                           SteadyStateMethod method = SteadyStateMethod::null_space,
                           double tol = 1e-10);

/// Relative-phase distribution from the phase-state representation:
///   P(theta) = (1/2pi) sum_k c_k e^{-ik theta},
///   c_k = sum_{n1,n2} <n1+k, n2| rho |n1, n2+k>.
PhaseDistribution phase_distribution_lme(const DensityMatrix& rho, int n_bins = 256);

/// Apply the superoperator to a density matrix (test and residual helper).
Eigen::MatrixXcd apply_superop(const SuperOp& L, const Eigen::MatrixXcd& rho);

/// Row-scale of the superoperator (max absolute row sum).
double superop_scale(const SuperOp& L);

}  // namespace qsync
