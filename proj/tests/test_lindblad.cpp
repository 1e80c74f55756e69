#include <doctest.h>

#include <cmath>

#include "qsync/lindblad.hpp"
#include "qsync/rng.hpp"

using namespace qsync;

namespace {

Eigen::MatrixXcd random_density(int dim, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXcd M(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) M(i, j) = cd{rng.normal(), rng.normal()};
    Eigen::MatrixXcd rho = M * M.adjoint();
    rho /= rho.trace().real();
    return rho;
}

// independent oracle: marginalize <theta1 theta2|rho|theta1 theta2> over the
// sum phase on a dense grid, with <theta|n> = e^{-i n theta}/sqrt(2 pi)
PhaseDistribution grid_marginal(const Eigen::MatrixXcd& rho, int N, int n_bins) {
    PhaseDistribution out;
    out.method = "grid-oracle";
    const double h = 2.0 * PI / n_bins;
    const int n2grid = 241;
    const double h2 = 2.0 * PI / n2grid;
    for (int i = 0; i < n_bins; ++i) {
        const double tm = -PI + (i + 0.5) * h;
        double acc = 0.0;
        for (int q = 0; q < n2grid; ++q) {
            const double t2 = -PI + q * h2;
            const double t1 = t2 + tm;
            Eigen::VectorXcd v(N * N);  // v_h = <n1 n2 | theta1 theta2>
            for (int n1 = 0; n1 < N; ++n1)
                for (int n2 = 0; n2 < N; ++n2)
                    v(n1 * N + n2) =
                        std::exp(I * (n1 * t1 + n2 * t2)) / (2.0 * PI);
            acc += (v.adjoint() * rho * v)(0, 0).real();
        }
        out.theta.push_back(tm);
        out.density.push_back(acc * h2);
    }
    return out;
}

}  // namespace

TEST_SUITE("lindblad") {

TEST_CASE("superoperator bookkeeping at cutoff 15") {
    const PairParams p{1.0, 1.0, 1.0, 0.1, 0.1};
    const FockSpace space{15};
    const auto L = build_liouvillian(p, space);
    CHECK(L.rows() == 50625);
    CHECK(L.cols() == 50625);
    CHECK(L.nonZeros() > 0);
    CHECK(L.nonZeros() < 50625LL * 40);  // sparse
}

TEST_CASE("cutoff guard rejects overfilled spaces") {
    const PairParams p{1.0, 1.0, 1.0, 0.02, 0.1};  // n = 25 photons
    CHECK_THROWS_AS((void)build_liouvillian(p, FockSpace{20}), Error);
}

TEST_CASE("trace functional annihilates the interior of the adjoint") {
    const PairParams p{1.01, 0.99, 1.0, 0.25, 0.1};
    const int N = 8;
    const auto L = build_liouvillian(p, FockSpace{N});
    const int dim = N * N;
    Eigen::VectorXcd vec_id = Eigen::VectorXcd::Zero(dim * dim);
    for (int h = 0; h < dim; ++h) vec_id(h + h * dim) = 1.0;
    const Eigen::VectorXcd z = L.adjoint() * vec_id;
    const double scale = superop_scale(L);
    for (int ket = 0; ket < dim; ++ket)
        for (int bra = 0; bra < dim; ++bra) {
            const int n1 = ket / N, n2 = ket % N, m1 = bra / N, m2 = bra % N;
            if (n1 <= N - 2 && n2 <= N - 2 && m1 <= N - 2 && m2 <= N - 2)
                CHECK(std::abs(z(ket + bra * dim)) < 1e-12 * scale);
        }
}

TEST_CASE("the superoperator maps hermitian to hermitian") {
    const PairParams p{1.02, 0.98, 1.0, 0.25, 0.08};
    const int N = 6;
    const auto L = build_liouvillian(p, FockSpace{N});
    const auto rho = random_density(N * N, 4);
    const Eigen::MatrixXcd lhs = apply_superop(L, rho);
    const Eigen::MatrixXcd rhs = apply_superop(L, Eigen::MatrixXcd(rho.adjoint()));
    CHECK((lhs.adjoint() - rhs).norm() < 1e-12 * lhs.norm());
}

TEST_CASE("bell-like superposition gives the cosine phase distribution") {
    const int N = 3;
    DensityMatrix dm;
    dm.cutoff = N;
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(N * N);
    psi(0 * N + 1) = 1.0 / std::sqrt(2.0);  // |0,1>
    psi(1 * N + 0) = 1.0 / std::sqrt(2.0);  // |1,0>
    dm.rho = psi * psi.adjoint();
    const auto P = phase_distribution_lme(dm, 128);
    for (std::size_t i = 0; i < P.theta.size(); i += 7)
        CHECK(P.density[i] ==
              doctest::Approx((1.0 + std::cos(P.theta[i])) / (2.0 * PI)).epsilon(1e-9));
}

TEST_CASE("diagonal states have a flat phase distribution") {
    const int N = 5;
    DensityMatrix dm;
    dm.cutoff = N;
    dm.rho = Eigen::MatrixXcd::Zero(N * N, N * N);
    Rng rng(8);
    double tr = 0.0;
    for (int h = 0; h < N * N; ++h) {
        const double w = rng.uniform();
        dm.rho(h, h) = w;
        tr += w;
    }
    dm.rho /= tr;
    const auto P = phase_distribution_lme(dm, 64);
    for (double v : P.density) CHECK(v == doctest::Approx(1.0 / (2.0 * PI)).epsilon(1e-12));
}

TEST_CASE("fourier coefficients match the direct grid marginalization") {
    for (int N : {4, 6}) {
        DensityMatrix dm;
        dm.cutoff = N;
        dm.rho = random_density(N * N, static_cast<std::uint64_t>(N));
        const auto fast = phase_distribution_lme(dm, 64);
        const auto slow = grid_marginal(dm.rho, N, 64);
        CHECK(linf_distance(fast, slow) < 1e-8);
    }
}

TEST_CASE("steady state methods agree and satisfy the invariants") {
    const PairParams p{1.005, 0.995, 1.0, 0.25, 0.1};  // n = 2 photons
    const FockSpace space{14};
    const auto L = build_liouvillian(p, space);
    const auto rho_ns = steady_state(L, space, SteadyStateMethod::null_space, 1e-10);
    const auto rho_prop = steady_state(L, space, SteadyStateMethod::propagation, 1e-8);
    CHECK((rho_ns.rho - rho_prop.rho).norm() < 1e-5);
    CHECK(rho_ns.residual < 1e-10);
    CHECK(rho_ns.rho.trace().real() == doctest::Approx(1.0).epsilon(1e-12));
    // semiclassical radius: <n> ~ r^2/2 = gamma1/(2 gamma2) = 2
    CHECK(rho_ns.mean_photon_number(0) == doctest::Approx(2.0).epsilon(0.25));
    CHECK(rho_ns.mean_photon_number(1) == doctest::Approx(2.0).epsilon(0.25));
}

TEST_CASE("global frequency shifts leave the steady state unchanged") {
    const FockSpace space{14};
    const PairParams a{1.01, 0.99, 1.0, 0.3, 0.1};
    const PairParams b{1.31, 1.29, 1.0, 0.3, 0.1};  // both frequencies + 0.3
    const auto ra = steady_state(build_liouvillian(a, space), space);
    const auto rb = steady_state(build_liouvillian(b, space), space);
    const auto pa = ra.photon_number_distribution(0);
    const auto pb = rb.photon_number_distribution(0);
    for (std::size_t n = 0; n < pa.size(); ++n)
        CHECK(pa[n] == doctest::Approx(pb[n]).epsilon(1e-10));
}

TEST_CASE("gain without two-photon loss is flagged as cutoff dominated") {
    PairParams p{1.0, 1.0, 1.0, 0.0, 0.05};  // gamma2 = 0
    const FockSpace space{6};
    const auto L = build_liouvillian(p, space);
    CHECK_THROWS_AS((void)steady_state(L, space, SteadyStateMethod::null_space, 1e-8), Error);
}

}  // TEST_SUITE
