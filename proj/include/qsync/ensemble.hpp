#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "qsync/sde.hpp"

namespace qsync {

struct AdlerSpec {
    double Delta = 0.0;
    double D = 0.1;
    double sigma0_sq = 0.1;
    double theta_init = PI;
    double dt = 1e-3;
    double T = 100.0;
};

struct SingleSlSpec {
    SingleOscillatorParams params;
    double dt = 1e-3;
    double T = 100.0;
};

struct PairSpec {
    SelfEnergyModel model;
    SaddleSolution saddle;
    QuarticCouplings couplings;
    PairSimOptions sim;
    double dt = 1e-3;
    double T = 100.0;
};

using SimulationSpec = std::variant<AdlerSpec, SingleSlSpec, PairSpec>;

/// Per-time mean/variance of one observable across the ensemble.
struct ChannelStats {
    std::string name;
    std::vector<double> mean;
    std::vector<double> var;
};

/// Time-resolved ensemble statistics. Deterministic given (spec, master_seed,
/// n_traj, stride): trajectories are merged in index order, so the result is
/// bit-identical for any worker count. `fit_times`/`fit_paths` hold a
/// decimated per-trajectory record of the diffusing phases for variance fits
/// and bootstrap resampling.
struct EnsembleStats {
    std::vector<double> times;
    std::vector<ChannelStats> channels;
    int n_traj = 0;
    std::uint64_t master_seed = 0;

    std::vector<double> fit_times;
    std::vector<std::string> fit_channel_names;
    std::vector<Eigen::MatrixXd> fit_paths;  // one (n_traj x n_fit_times) matrix per channel

    const ChannelStats& channel(const std::string& name) const;
    const Eigen::MatrixXd& fit_channel(const std::string& name) const;
};

struct EnsembleOptions {
    int n_traj = 100;
    std::uint64_t master_seed = 1;
    int stride = 1;
    int threads = 0;          // 0 = library default (QSYNC_THREADS or OpenMP)
    int fit_grid_max = 256;   // decimated time points kept per trajectory
};

/// Seeded trajectory ensemble with streaming Welford statistics. Parallel
/// over trajectories in fixed-size chunks; merge order never depends on the
/// schedule.
EnsembleStats run_ensemble(const SimulationSpec& spec, const EnsembleOptions& opts);

/// Serial reference implementation (identical output, single loop). Kept for
/// testing and as the benchmark baseline.
EnsembleStats run_ensemble_serial(const SimulationSpec& spec, const EnsembleOptions& opts);

/// Pool of full trajectories (for histograms / autocorrelation); parallel,
/// ordered by index.
std::vector<Trajectory> run_trajectories(const SimulationSpec& spec, const EnsembleOptions& opts);

int resolve_thread_count(int requested);

}  // namespace qsync
