#include "qsync/ensemble.hpp"

#include <algorithm>
#include <cstdlib>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qsync/rng.hpp"

namespace qsync {

namespace {

constexpr int kChunk = 64;  // fixed chunk size keeps the merge order schedule-free

Trajectory run_one(const SimulationSpec& spec, std::uint64_t seed, int stride) {
    return std::visit(
        [&](const auto& s) -> Trajectory {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, AdlerSpec>) {
                return simulate_adler(s.Delta, s.D, s.sigma0_sq, s.theta_init, s.dt, s.T, seed,
                                      stride);
            } else if constexpr (std::is_same_v<T, SingleSlSpec>) {
                return simulate_single_sl(s.params, s.dt, s.T, seed, stride);
            } else {
                PairSimOptions sim = s.sim;
                sim.stride = stride;
                return simulate_pair_nonmarkovian(s.model, s.saddle, s.couplings, s.dt, s.T,
                                                  seed, sim);
            }
        },
        spec);
}

struct ChannelView {
    std::string name;
    const std::vector<double>* a = nullptr;
    const std::vector<double>* b = nullptr;
    double sb = 1.0;  // value = a + sb * b (for theta_+/-)

    double value(std::size_t i) const { return b ? (*a)[i] + sb * (*b)[i] : (*a)[i]; }
};

std::vector<ChannelView> channel_views(const Trajectory& tr) {
    switch (tr.kind) {
        case TrajectoryKind::adler:
            return {{"theta_minus", &tr.theta1, nullptr, 1.0}};
        case TrajectoryKind::single_sl:
            return {{"theta", &tr.theta1, nullptr, 1.0}, {"eta", &tr.eta1, nullptr, 1.0}};
        case TrajectoryKind::pair:
            return {{"theta_plus", &tr.theta1, &tr.theta2, 1.0},
                    {"theta_minus", &tr.theta1, &tr.theta2, -1.0},
                    {"eta1", &tr.eta1, nullptr, 1.0},
                    {"eta2", &tr.eta2, nullptr, 1.0}};
    }
    return {};
}

std::vector<std::string> fit_channel_names(TrajectoryKind kind) {
    switch (kind) {
        case TrajectoryKind::adler: return {"theta_minus"};
        case TrajectoryKind::single_sl: return {"theta"};
        case TrajectoryKind::pair: return {"theta_plus", "theta_minus"};
    }
    return {};
}

struct Accumulator {
    // Welford per (channel, time)
    std::vector<std::string> names;
    std::vector<std::vector<double>> mean, m2;
    long long count = 0;

    void init(const Trajectory& tr) {
        const auto views = channel_views(tr);
        names.clear();
        for (const auto& v : views) names.push_back(v.name);
        mean.assign(views.size(), std::vector<double>(tr.n_samples(), 0.0));
        m2.assign(views.size(), std::vector<double>(tr.n_samples(), 0.0));
    }

    void add(const Trajectory& tr) {
        const auto views = channel_views(tr);
        ++count;
        const double inv = 1.0 / static_cast<double>(count);
        for (std::size_t c = 0; c < views.size(); ++c) {
            double* mu = mean[c].data();
            double* s2 = m2[c].data();
            for (std::size_t i = 0; i < tr.n_samples(); ++i) {
                const double x = views[c].value(i);
                const double d = x - mu[i];
                mu[i] += d * inv;
                s2[i] += d * (x - mu[i]);
            }
        }
    }
};

}  // namespace

const ChannelStats& EnsembleStats::channel(const std::string& name) const {
    for (const auto& c : channels)
        if (c.name == name) return c;
    throw Error(Errc::invalid_model, "EnsembleStats::channel", "no channel named " + name);
}

const Eigen::MatrixXd& EnsembleStats::fit_channel(const std::string& name) const {
    for (std::size_t i = 0; i < fit_channel_names.size(); ++i)
        if (fit_channel_names[i] == name) return fit_paths[i];
    throw Error(Errc::invalid_model, "EnsembleStats::fit_channel", "no channel named " + name);
}

int resolve_thread_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("QSYNC_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace {

EnsembleStats run_ensemble_impl(const SimulationSpec& spec, const EnsembleOptions& opts,
                                int threads) {
    require(opts.n_traj >= 1, Errc::insufficient_data, "run_ensemble",
            "need at least one trajectory");

    EnsembleStats stats;
    stats.n_traj = opts.n_traj;
    stats.master_seed = opts.master_seed;

    Accumulator acc;
    bool first = true;
    std::size_t n_samples = 0;
    std::vector<std::size_t> fit_index;

    std::vector<Trajectory> chunk(std::min(opts.n_traj, kChunk));

#ifndef _OPENMP
    (void)threads;
#endif
    std::exception_ptr worker_error;
    for (int base = 0; base < opts.n_traj; base += kChunk) {
        const int m = std::min(kChunk, opts.n_traj - base);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
        for (int j = 0; j < m; ++j) {
            try {
                chunk[static_cast<std::size_t>(j)] = run_one(
                    spec, derive_seed(opts.master_seed, static_cast<std::uint64_t>(base + j)),
                    opts.stride);
            } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
                if (!worker_error) worker_error = std::current_exception();
            }
        }
        if (worker_error) std::rethrow_exception(worker_error);
        for (int j = 0; j < m; ++j) {
            Trajectory& tr = chunk[static_cast<std::size_t>(j)];
            if (first) {
                first = false;
                n_samples = tr.n_samples();
                acc.init(tr);
                stats.times = tr.times;
                // decimated grid for per-trajectory fit paths
                const std::size_t step =
                    std::max<std::size_t>(1, (n_samples - 1) / std::max(1, opts.fit_grid_max - 1));
                for (std::size_t i = 0; i < n_samples; i += step) fit_index.push_back(i);
                if (fit_index.back() != n_samples - 1) fit_index.push_back(n_samples - 1);
                stats.fit_channel_names = fit_channel_names(tr.kind);
                for (const std::size_t i : fit_index) stats.fit_times.push_back(tr.times[i]);
                stats.fit_paths.assign(
                    stats.fit_channel_names.size(),
                    Eigen::MatrixXd(opts.n_traj, static_cast<int>(fit_index.size())));
            }
            require(tr.n_samples() == n_samples, Errc::insufficient_data, "run_ensemble",
                    "trajectory lengths differ");
            acc.add(tr);
            const auto views = channel_views(tr);
            for (std::size_t c = 0; c < stats.fit_channel_names.size(); ++c) {
                const auto it = std::find_if(views.begin(), views.end(), [&](const auto& v) {
                    return v.name == stats.fit_channel_names[c];
                });
                for (std::size_t q = 0; q < fit_index.size(); ++q)
                    stats.fit_paths[c](base + j, static_cast<int>(q)) =
                        it->value(fit_index[q]);
            }
            tr = Trajectory{};  // release memory early
        }
    }

    stats.channels.resize(acc.names.size());
    for (std::size_t c = 0; c < acc.names.size(); ++c) {
        stats.channels[c].name = acc.names[c];
        stats.channels[c].mean = std::move(acc.mean[c]);
        stats.channels[c].var.resize(n_samples);
        const double denom = (acc.count > 1) ? static_cast<double>(acc.count - 1) : 1.0;
        for (std::size_t i = 0; i < n_samples; ++i)
            stats.channels[c].var[i] = acc.m2[c][i] / denom;
    }

    return stats;
}

}  // namespace

EnsembleStats run_ensemble(const SimulationSpec& spec, const EnsembleOptions& opts) {
    return run_ensemble_impl(spec, opts, resolve_thread_count(opts.threads));
}

EnsembleStats run_ensemble_serial(const SimulationSpec& spec, const EnsembleOptions& opts) {
    return run_ensemble_impl(spec, opts, 1);
}

std::vector<Trajectory> run_trajectories(const SimulationSpec& spec,
                                         const EnsembleOptions& opts) {
    require(opts.n_traj >= 1, Errc::insufficient_data, "run_trajectories",
            "need at least one trajectory");
    std::vector<Trajectory> out(static_cast<std::size_t>(opts.n_traj));
    const int threads = resolve_thread_count(opts.threads);
#ifndef _OPENMP
    (void)threads;
#endif
    std::exception_ptr worker_error;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
    for (int j = 0; j < opts.n_traj; ++j) {
        try {
            out[static_cast<std::size_t>(j)] = run_one(
                spec, derive_seed(opts.master_seed, static_cast<std::uint64_t>(j)), opts.stride);
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
            if (!worker_error) worker_error = std::current_exception();
        }
    }
    if (worker_error) std::rethrow_exception(worker_error);
    return out;
}

}  // namespace qsync
