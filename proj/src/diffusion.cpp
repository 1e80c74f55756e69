#include "qsync/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "qsync/rng.hpp"

namespace qsync {

NoiseVariances noise_variances(const PairParams& params) {
    const double g1 = params.gamma1, g2 = params.gamma2, D = params.D;
    require(g1 > 0.0 && g2 > 0.0 && D >= 0.0, Errc::invalid_model, "noise_variances",
            "invalid rates");
    double ct0 = 0.0;  // cos(theta0); 0 on the unsynchronized branch
    const double Delta = params.delta();
    if (D > 0.0 && std::abs(Delta) <= D)
        ct0 = -std::sqrt(std::max(0.0, 1.0 - (Delta / D) * (Delta / D)));
    const double denom = g1 - D - D * ct0;
    require(denom > 0.0, Errc::no_limit_cycle, "noise_variances",
            "no limit cycle at these rates");
    NoiseVariances out;
    out.xi_plus_sq = g2 * (3.0 * g1 - D - D * ct0) / denom;
    out.xi_minus_sq = g2 * (3.0 * g1 - D - 3.0 * D * ct0) / denom;
    return out;
}

namespace {

// trapezoid on a periodic integrand sampled at n points spanning [0, 2pi)
double periodic_trapz(const std::vector<double>& f, double h) {
    double s = 0.0;
    for (const double v : f) s += v;
    return s * h;
}

struct QuadraturePass {
    double value = 0.0;
    bool underflowed = false;
};

QuadraturePass sigma_minus_pass(double Delta, double D, double sigma, int n) {
    // the effective diffusion constant is even in the tilt; computing with
    // |Delta| keeps the period-shift factor q = e^{-Delta L / sigma} <= 1
    Delta = std::abs(Delta);
    const double L = 2.0 * PI;
    const double h = L / n;
    auto V = [&](double x) { return (-Delta * x + D * std::cos(x)) / sigma; };

    double vmax = -1e300, vmin = 1e300;
    for (int i = 0; i <= n; ++i) {
        vmax = std::max(vmax, V(i * h));
        vmin = std::min(vmin, V(i * h));
    }

    // I+(x) = (1/sigma) int_0^L dy e^{[V(x)-V(x-y)]/..}
    //       = (1/sigma) e^{V(x)} [ P-(x) + q (W- - P-(x)) ],
    // I-(x) = (1/sigma) e^{-V(x)} [ S+(x) + q P+(x) ],
    // where P/S are prefix/suffix integrals of e^{-+V} over [0, L] and the
    // period shift V(u -+ L) = V(u) +- Delta L folds the out-of-cell pieces
    // back with q = e^{-Delta L / sigma}. Everything is a sum of positive
    // terms, so no cancellation at large tilt or barrier. The common factor
    // e^{vmax - vmin} drops out of the final ratio
    //   D_eff = sigma L^2 int I+^2 I- dx / (int I+ dx)^3.
    const double q = std::exp(-Delta * L / sigma);
    std::vector<double> wth_m(static_cast<std::size_t>(n)), wth_p(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m) {
        const double u = (m + 0.5) * h;  // midpoint rule
        wth_m[static_cast<std::size_t>(m)] = std::exp(-(V(u) - vmin));
        wth_p[static_cast<std::size_t>(m)] = std::exp(V(u) - vmax);
    }
    std::vector<double> pre_m(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> pre_p(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> suf_p(static_cast<std::size_t>(n) + 1, 0.0);
    for (int m = 0; m < n; ++m) {
        pre_m[static_cast<std::size_t>(m) + 1] =
            pre_m[static_cast<std::size_t>(m)] + wth_m[static_cast<std::size_t>(m)];
        pre_p[static_cast<std::size_t>(m) + 1] =
            pre_p[static_cast<std::size_t>(m)] + wth_p[static_cast<std::size_t>(m)];
    }
    for (int m = n - 1; m >= 0; --m)
        suf_p[static_cast<std::size_t>(m)] =
            suf_p[static_cast<std::size_t>(m) + 1] + wth_p[static_cast<std::size_t>(m)];
    const double wtot_m = pre_m[static_cast<std::size_t>(n)];

    std::vector<double> Ip(static_cast<std::size_t>(n)), Im(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double x = i * h;
        const double sp = pre_m[static_cast<std::size_t>(i)] +
                          q * (wtot_m - pre_m[static_cast<std::size_t>(i)]);
        const double sm = suf_p[static_cast<std::size_t>(i)] +
                          q * pre_p[static_cast<std::size_t>(i)];
        Ip[static_cast<std::size_t>(i)] = std::exp(V(x) - vmax) * sp * h;
        Im[static_cast<std::size_t>(i)] = std::exp(-(V(x) - vmin)) * sm * h;
    }
    std::vector<double> num(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        num[static_cast<std::size_t>(i)] = Ip[static_cast<std::size_t>(i)] *
                                           Ip[static_cast<std::size_t>(i)] *
                                           Im[static_cast<std::size_t>(i)];
    const double int_num = periodic_trapz(num, h);
    const double int_den = periodic_trapz(Ip, h);

    QuadraturePass out;
    if (int_num <= 0.0 || int_den <= 0.0 || !std::isfinite(int_num) ||
        !std::isfinite(int_den)) {
        out.underflowed = true;
        return out;
    }
    out.value = sigma * L * L * int_num / (int_den * int_den * int_den);
    if (!std::isfinite(out.value)) out.underflowed = true;
    return out;
}

}  // namespace

SigmaMinusResult reimann_sigma_minus(double Delta, double D, double sigma0_sq) {
    require(sigma0_sq > 0.0, Errc::invalid_model, "reimann_sigma_minus",
            "noise intensity must be positive");
    if (D == 0.0) return {sigma0_sq, false};

    int n = 512;
    QuadraturePass prev = sigma_minus_pass(Delta, D, sigma0_sq, n);
    for (; n <= (1 << 15); n *= 2) {
        const QuadraturePass next = sigma_minus_pass(Delta, D, sigma0_sq, 2 * n);
        if (prev.underflowed && next.underflowed) return {0.0, true};
        if (!next.underflowed && !prev.underflowed) {
            const double rel =
                std::abs(next.value - prev.value) / std::max(std::abs(next.value), 1e-300);
            if (rel < 1e-6) return {next.value, false};
        }
        prev = next;
    }
    throw Error(Errc::not_converged, "reimann_sigma_minus",
                "quadrature did not reach the requested relative error");
}

namespace {

struct WindowIndices {
    std::vector<int> idx;
    std::vector<double> t;
};

WindowIndices fit_window(const EnsembleStats& stats, const FitOptions& opts) {
    const auto& times = stats.fit_times;
    require(times.size() >= 10, Errc::insufficient_data, "fit_diffusion",
            "need at least 10 stored time points");
    const double T = times.back();
    const double t_begin = std::max(opts.burn_in_fraction * T,
                                    (1.0 - opts.window_fraction) * T);
    WindowIndices w;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] >= t_begin) {
            w.idx.push_back(static_cast<int>(i));
            w.t.push_back(times[i]);
        }
    }
    require(w.idx.size() >= 10, Errc::insufficient_data, "fit_diffusion",
            "fit window has fewer than 10 points");
    return w;
}

// slope of OLS Var(t) ~ a + b t over the window, for a subset of trajectories
double variance_slope(const Eigen::MatrixXd& paths, const std::vector<int>& cols,
                      const std::vector<double>& t, const std::vector<int>* rows) {
    const int nt = static_cast<int>(cols.size());
    std::vector<double> var(static_cast<std::size_t>(nt));
    const int n = rows ? static_cast<int>(rows->size()) : static_cast<int>(paths.rows());
    for (int q = 0; q < nt; ++q) {
        double s = 0.0, s2 = 0.0;
        for (int r = 0; r < n; ++r) {
            const double x = paths(rows ? (*rows)[static_cast<std::size_t>(r)] : r,
                                   cols[static_cast<std::size_t>(q)]);
            s += x;
            s2 += x * x;
        }
        const double mean = s / n;
        var[static_cast<std::size_t>(q)] = (n > 1) ? (s2 - n * mean * mean) / (n - 1) : 0.0;
    }
    double st = 0.0, sv = 0.0, stt = 0.0, stv = 0.0;
    for (int q = 0; q < nt; ++q) {
        st += t[static_cast<std::size_t>(q)];
        sv += var[static_cast<std::size_t>(q)];
        stt += t[static_cast<std::size_t>(q)] * t[static_cast<std::size_t>(q)];
        stv += t[static_cast<std::size_t>(q)] * var[static_cast<std::size_t>(q)];
    }
    const double denom = nt * stt - st * st;
    return (nt * stv - st * sv) / denom;
}

}  // namespace

DiffusionFit fit_diffusion(const EnsembleStats& stats, const std::string& channel,
                           const FitOptions& opts) {
    const Eigen::MatrixXd& paths = stats.fit_channel(channel);
    const WindowIndices w = fit_window(stats, opts);

    DiffusionFit fit;
    fit.sigma_sq = 0.5 * variance_slope(paths, w.idx, w.t, nullptr);

    const int n_traj = static_cast<int>(paths.rows());
    std::vector<double> boots;
    boots.reserve(static_cast<std::size_t>(opts.n_bootstrap));
    Rng rng(opts.bootstrap_seed);
    std::vector<int> rows(static_cast<std::size_t>(n_traj));
    for (int b = 0; b < opts.n_bootstrap; ++b) {
        for (int r = 0; r < n_traj; ++r)
            rows[static_cast<std::size_t>(r)] =
                static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n_traj));
        boots.push_back(0.5 * variance_slope(paths, w.idx, w.t, &rows));
    }
    std::sort(boots.begin(), boots.end());
    const auto pick = [&](double q) {
        const double pos = q * (boots.size() - 1);
        const std::size_t i = static_cast<std::size_t>(pos);
        const double frac = pos - i;
        return (i + 1 < boots.size()) ? boots[i] * (1.0 - frac) + boots[i + 1] * frac
                                      : boots[i];
    };
    fit.ci_low = pick(0.025);
    fit.ci_high = pick(0.975);
    return fit;
}

double variance_linearity_r2(const EnsembleStats& stats, const std::string& channel,
                             const FitOptions& opts) {
    const auto& ch = stats.channel(channel);
    const auto& times = stats.times;
    const double T = times.back();
    const double t_begin =
        std::max(opts.burn_in_fraction * T, (1.0 - opts.window_fraction) * T);
    std::vector<double> t, v;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] >= t_begin) {
            t.push_back(times[i]);
            v.push_back(ch.var[i]);
        }
    }
    require(t.size() >= 10, Errc::insufficient_data, "variance_linearity_r2",
            "fit window has fewer than 10 points");
    const double n = static_cast<double>(t.size());
    double st = 0, sv = 0, stt = 0, stv = 0, svv = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        st += t[i];
        sv += v[i];
        stt += t[i] * t[i];
        stv += t[i] * v[i];
        svv += v[i] * v[i];
    }
    const double sxx = stt - st * st / n;
    const double syy = svv - sv * sv / n;
    const double sxy = stv - st * sv / n;
    if (syy <= 0.0) return 1.0;  // variance exactly linear/constant
    return (sxy * sxy) / (sxx * syy);
}

PhaseDistribution wrapped_histogram(std::span<const Trajectory> trajectories, int n_bins,
                                    double burn_in_fraction) {
    require(!trajectories.empty(), Errc::insufficient_data, "wrapped_histogram",
            "no trajectories");
    PhaseDistribution out;
    out.method = "histogram";
    const double h = 2.0 * PI / n_bins;
    out.theta.resize(static_cast<std::size_t>(n_bins));
    for (int i = 0; i < n_bins; ++i) out.theta[static_cast<std::size_t>(i)] = -PI + (i + 0.5) * h;
    std::vector<double> counts(static_cast<std::size_t>(n_bins), 0.0);

    std::size_t retained = 0;
    for (const Trajectory& tr : trajectories) {
        const std::size_t n = tr.n_samples();
        const std::size_t burn = static_cast<std::size_t>(burn_in_fraction * n);
        for (std::size_t k = burn; k < n; ++k) {
            double tm = 0.0;
            switch (tr.kind) {
                case TrajectoryKind::adler: tm = tr.theta1[k]; break;
                case TrajectoryKind::single_sl: tm = tr.theta1[k]; break;
                case TrajectoryKind::pair: tm = tr.theta1[k] - tr.theta2[k]; break;
            }
            double wph = wrap_angle(tm);
            if (wph >= PI) wph -= 2.0 * PI;  // map the pi endpoint into [-pi, pi)
            int bin = static_cast<int>((wph + PI) / h);
            bin = std::clamp(bin, 0, n_bins - 1);
            counts[static_cast<std::size_t>(bin)] += 1.0;
            ++retained;
        }
    }
    require(retained >= 100, Errc::insufficient_data, "wrapped_histogram",
            "fewer than 100 retained samples");
    out.density.resize(static_cast<std::size_t>(n_bins));
    for (int i = 0; i < n_bins; ++i)
        out.density[static_cast<std::size_t>(i)] =
            counts[static_cast<std::size_t>(i)] / (static_cast<double>(retained) * h);
    // single-bin inputs are legitimate (constant trajectories); skip the
    // negative-density check in finalize by normalizing directly
    double sum = 0.0;
    for (const double v : out.density) sum += v * h;
    for (double& v : out.density) v /= sum;
    return out;
}

DiffusionReport diffusion_report(const PairParams& params) {
    const NoiseVariances nv = noise_variances(params);
    DiffusionReport rep;
    rep.sigma0_sq = nv.sigma0_sq();
    rep.sigma_plus_sq = nv.sigma_plus_sq();
    const SigmaMinusResult sm = reimann_sigma_minus(params.delta(), params.D, rep.sigma0_sq);
    rep.sigma_minus_sq = sm.sigma_minus_sq;
    rep.underflowed = sm.underflowed;
    rep.ratio_minus_to_free = rep.sigma_minus_sq / rep.sigma0_sq;
    rep.ratio_minus_to_plus =
        (rep.sigma_plus_sq > 0.0) ? rep.sigma_minus_sq / rep.sigma_plus_sq : 0.0;
    rep.ci_low = rep.ci_high = rep.sigma_minus_sq;
    return rep;
}

}  // namespace qsync
