#include "qsync/fokker_planck.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

namespace qsync {

void PhaseDistribution::finalize(const std::string& op) {
    double sum = 0.0;
    const double h = bin_width();
    for (double& v : density) {
        require(v >= -1e-12, Errc::not_converged, op, "density went negative");
        if (v < 0.0) v = 0.0;
        sum += v * h;
    }
    require(sum > 0.0, Errc::not_converged, op, "density sums to zero");
    for (double& v : density) v /= sum;
}

double l1_distance(const PhaseDistribution& a, const PhaseDistribution& b) {
    require(a.theta.size() == b.theta.size(), Errc::invalid_model, "l1_distance",
            "grids differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.density.size(); ++i)
        s += std::abs(a.density[i] - b.density[i]);
    return s * a.bin_width();
}

double linf_distance(const PhaseDistribution& a, const PhaseDistribution& b) {
    require(a.theta.size() == b.theta.size(), Errc::invalid_model, "linf_distance",
            "grids differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.density.size(); ++i)
        s = std::max(s, std::abs(a.density[i] - b.density[i]));
    return s;
}

double peak_location(const PhaseDistribution& p) {
    const auto it = std::max_element(p.density.begin(), p.density.end());
    return p.theta[static_cast<std::size_t>(it - p.density.begin())];
}

namespace {

std::vector<double> cell_centers(int n) {
    std::vector<double> th(n);
    const double h = 2.0 * PI / n;
    for (int i = 0; i < n; ++i) th[i] = -PI + (i + 0.5) * h;
    return th;
}

// One continued-fraction pass: Fourier coefficients c_k of the stationary
// density, k = 1..K, from S_k = c_k / c_{k-1} = 1 / (S_{k+1} - a_k) with
// a_k = (2/D)(i Delta + k sigma0_sq).
std::vector<cd> cf_coefficients(double Delta, double D, double sigma0_sq, int K) {
    std::vector<cd> S(K + 2, cd{0.0, 0.0});
    for (int k = K; k >= 1; --k) {
        const cd a = (2.0 / D) * cd{k * sigma0_sq, Delta};
        S[k] = 1.0 / (S[k + 1] - a);
    }
    std::vector<cd> c(K + 1);
    c[0] = 1.0;
    for (int k = 1; k <= K; ++k) c[k] = c[k - 1] * S[k];
    return c;
}

std::vector<double> cf_density_on(const std::vector<double>& th, const std::vector<cd>& c) {
    std::vector<double> p(th.size());
    for (std::size_t i = 0; i < th.size(); ++i) {
        const cd rot = std::exp(I * th[i]);
        cd z = rot;
        double v = 1.0 / (2.0 * PI);
        for (std::size_t k = 1; k < c.size(); ++k) {
            v += (c[k] * z).real() / PI;
            z *= rot;
        }
        p[i] = v;
    }
    return p;
}

}  // namespace

PhaseDistribution stationary_adler_cf(double Delta, double D, double sigma0_sq,
                                      int n_harmonics, int n_bins) {
    require(sigma0_sq > 0.0, Errc::invalid_model, "stationary_adler_cf",
            "noise intensity must be positive");
    PhaseDistribution out;
    out.theta = cell_centers(n_bins);
    out.method = "continued-fraction";
    if (D == 0.0) {
        out.density.assign(n_bins, 1.0 / (2.0 * PI));
        return out;
    }
    int K = std::max(n_harmonics, 8);
    std::vector<double> prev = cf_density_on(out.theta, cf_coefficients(Delta, D, sigma0_sq, K));
    for (; K <= (1 << 16); K *= 2) {
        std::vector<double> next =
            cf_density_on(out.theta, cf_coefficients(Delta, D, sigma0_sq, 2 * K));
        double diff = 0.0;
        for (std::size_t i = 0; i < prev.size(); ++i)
            diff = std::max(diff, std::abs(next[i] - prev[i]));
        prev = std::move(next);
        if (diff < 1e-10) {
            out.density = std::move(prev);
            out.finalize("stationary_adler_cf");
            return out;
        }
    }
    throw Error(Errc::not_converged, "stationary_adler_cf",
                "harmonic doubling did not converge");
}

PhaseDistribution stationary_adler_grid(double Delta, double D, double sigma0_sq, int n_grid) {
    require(n_grid >= 256, Errc::invalid_model, "stationary_adler_grid",
            "need at least 256 cells");
    require(sigma0_sq > 0.0, Errc::invalid_model, "stationary_adler_grid",
            "noise intensity must be positive");
    const int n = n_grid;
    const double h = 2.0 * PI / n;

    // unknowns x = (P_0..P_{n-1}, J); one constant-flux equation per face plus
    // the normalization row. Face i sits between cells i and (i+1) mod n at
    // theta = -pi + (i+1) h.
    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> trips;
    trips.reserve(static_cast<std::size_t>(4 * n + n));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    for (int i = 0; i < n; ++i) {
        const int j = (i + 1) % n;
        const double face = -PI + (i + 1) * h;
        const double f = Delta + D * std::sin(face);
        // f*(P_i+P_j)/2 - sigma (P_j - P_i)/h - J = 0
        trips.emplace_back(i, i, 0.5 * f + sigma0_sq / h);
        trips.emplace_back(i, j, 0.5 * f - sigma0_sq / h);
        trips.emplace_back(i, n, -1.0);
    }
    for (int i = 0; i < n; ++i) trips.emplace_back(n, i, h);
    rhs(n) = 1.0;

    Eigen::SparseMatrix<double> A(n + 1, n + 1);
    A.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    require(lu.info() == Eigen::Success, Errc::singular_system, "stationary_adler_grid",
            "factorization of the cyclic system failed");
    const Eigen::VectorXd x = lu.solve(rhs);
    require(lu.info() == Eigen::Success, Errc::singular_system, "stationary_adler_grid",
            "solve of the cyclic system failed");

    PhaseDistribution out;
    out.theta = cell_centers(n);
    out.density.assign(x.data(), x.data() + n);
    out.method = "finite-volume";
    out.finalize("stationary_adler_grid");
    return out;
}

double liouvillian_branch(double gamma2, int l) {
    return 0.75 * gamma2 * static_cast<double>(l) * static_cast<double>(l);
}

}  // namespace qsync
