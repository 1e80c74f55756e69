#include "qsync/lindblad.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <unsupported/Eigen/KroneckerProduct>

namespace qsync {

namespace {

SuperOp annihilation(int N) {
    SuperOp a(N, N);
    std::vector<Eigen::Triplet<cd>> t;
    for (int n = 1; n < N; ++n) t.emplace_back(n - 1, n, cd{std::sqrt(double(n)), 0.0});
    a.setFromTriplets(t.begin(), t.end());
    return a;
}

SuperOp sparse_id(int n) {
    SuperOp id(n, n);
    id.setIdentity();
    return id;
}

}  // namespace

SuperOp build_liouvillian(const PairParams& params, const FockSpace& space) {
    const int N = space.cutoff;
    require(N >= 2, Errc::invalid_model, "build_liouvillian", "cutoff must be >= 2");
    // gamma2 = 0 has no finite limit cycle; it builds fine and steady_state
    // reports CutoffDominated instead
    if (params.gamma2 > 0.0)
        require(params.photon_number() <= 0.5 * N, Errc::cutoff_too_small, "build_liouvillian",
                "estimated photon number exceeds half the cutoff");

    const int dim = space.hilbert_dim();
    const SuperOp idN = sparse_id(N);
    const SuperOp idH = sparse_id(dim);
    const SuperOp a = annihilation(N);
    const SuperOp a1 = Eigen::kroneckerProduct(a, idN).eval();
    const SuperOp a2 = Eigen::kroneckerProduct(idN, a).eval();

    SuperOp H(dim, dim);
    {
        const SuperOp n1 = (a1.adjoint() * a1).eval();
        const SuperOp n2 = (a2.adjoint() * a2).eval();
        H = (0.5 * params.delta() * (n1 - n2)).eval();
    }

    std::vector<SuperOp> jumps;
    jumps.push_back((std::sqrt(params.gamma1) * a1.adjoint()).eval());
    jumps.push_back((std::sqrt(params.gamma1) * a2.adjoint()).eval());
    jumps.push_back((std::sqrt(params.gamma2) * a1 * a1).eval());
    jumps.push_back((std::sqrt(params.gamma2) * a2 * a2).eval());
    if (params.D > 0.0) jumps.push_back((std::sqrt(params.D) * (a1 + a2)).eval());

    // vec(A rho B) = kron(B^T, A) vec(rho) for column-major vec
    SuperOp L = (-I * Eigen::kroneckerProduct(idH, H)).eval();
    L += (I * Eigen::kroneckerProduct(H.transpose(), idH)).eval();
    for (const SuperOp& Lk : jumps) {
        const SuperOp LdL = (Lk.adjoint() * Lk).eval();
        L += Eigen::kroneckerProduct(Lk.conjugate(), Lk).eval();
        L -= (0.5 * Eigen::kroneckerProduct(idH, LdL)).eval();
        L -= (0.5 * Eigen::kroneckerProduct(SuperOp(LdL.transpose()), idH)).eval();
    }
    L.makeCompressed();
    return L;
}

Eigen::MatrixXcd apply_superop(const SuperOp& L, const Eigen::MatrixXcd& rho) {
    const Eigen::Map<const Eigen::VectorXcd> v(rho.data(), rho.size());
    const Eigen::VectorXcd w = L * v;
    return Eigen::Map<const Eigen::MatrixXcd>(w.data(), rho.rows(), rho.cols());
}

double superop_scale(const SuperOp& L) {
    Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(L.rows());
    for (int k = 0; k < L.outerSize(); ++k)
        for (SuperOp::InnerIterator it(L, k); it; ++it)
            rowsum(it.row()) += std::abs(it.value());
    return rowsum.maxCoeff();
}

void DensityMatrix::validate(const std::string& op) const {
    const double tr = rho.trace().real();
    require(std::abs(tr - 1.0) < 1e-10, Errc::not_converged, op, "trace differs from 1");
    require((rho - rho.adjoint()).norm() < 1e-10 * rho.norm(), Errc::not_converged, op,
            "state is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
    require(es.eigenvalues().minCoeff() >= -1e-8, Errc::not_converged, op,
            "state has a negative eigenvalue beyond tolerance");
}

double DensityMatrix::boundary_population() const {
    const int N = cutoff;
    double pop = 0.0;
    for (int n1 = 0; n1 < N; ++n1)
        for (int n2 = 0; n2 < N; ++n2)
            if (n1 == N - 1 || n2 == N - 1) pop += rho(n1 * N + n2, n1 * N + n2).real();
    return pop;
}

double DensityMatrix::mean_photon_number(int mode) const {
    const int N = cutoff;
    double s = 0.0;
    for (int n1 = 0; n1 < N; ++n1)
        for (int n2 = 0; n2 < N; ++n2)
            s += (mode == 0 ? n1 : n2) * rho(n1 * N + n2, n1 * N + n2).real();
    return s;
}

std::vector<double> DensityMatrix::photon_number_distribution(int mode) const {
    const int N = cutoff;
    std::vector<double> p(static_cast<std::size_t>(N), 0.0);
    for (int n1 = 0; n1 < N; ++n1)
        for (int n2 = 0; n2 < N; ++n2)
            p[static_cast<std::size_t>(mode == 0 ? n1 : n2)] +=
                rho(n1 * N + n2, n1 * N + n2).real();
    return p;
}

namespace {

// Liouville-space indices with equal ket and bra total photon number. The
// Liouvillian conserves this difference, and the steady state lives in the
// zero sector together with every observable we extract (populations and the
// relative-phase coherences).
std::vector<int> zero_sector(int N) {
    const int dim = N * N;
    std::vector<int> sector;
    for (int bra = 0; bra < dim; ++bra) {
        const int m1 = bra / N, m2 = bra % N;
        for (int ket = 0; ket < dim; ++ket) {
            const int n1 = ket / N, n2 = ket % N;
            if (n1 + n2 == m1 + m2) sector.push_back(ket + bra * dim);
        }
    }
    return sector;
}

DensityMatrix assemble_state(const Eigen::VectorXcd& x, const std::vector<int>& sector,
                             const FockSpace& space, double residual) {
    const int dim = space.hilbert_dim();
    DensityMatrix out;
    out.cutoff = space.cutoff;
    out.residual = residual;
    out.rho = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::size_t p = 0; p < sector.size(); ++p) {
        const int ket = sector[p] % dim;
        const int bra = sector[p] / dim;
        out.rho(ket, bra) = x(static_cast<int>(p));
    }
    out.rho = 0.5 * (out.rho + out.rho.adjoint()).eval();
    out.rho /= out.rho.trace().real();
    return out;
}

DensityMatrix steady_state_null_space(const SuperOp& L, const FockSpace& space, double tol) {
    const int dim = space.hilbert_dim();
    const std::vector<int> sector = zero_sector(space.cutoff);
    const int ns = static_cast<int>(sector.size());

    std::vector<int> pos(static_cast<std::size_t>(dim) * dim, -1);
    for (int p = 0; p < ns; ++p) pos[static_cast<std::size_t>(sector[static_cast<std::size_t>(p)])] = p;

    std::vector<Eigen::Triplet<cd>> t_full, t_solve;
    for (int p = 0; p < ns; ++p) {
        const int col = sector[static_cast<std::size_t>(p)];
        for (SuperOp::InnerIterator it(L, col); it; ++it) {
            const int rp = pos[static_cast<std::size_t>(it.row())];
            if (rp < 0) continue;
            t_full.emplace_back(rp, p, it.value());
            if (rp != 0) t_solve.emplace_back(rp, p, it.value());
        }
    }
    // trace row replaces row 0
    for (int p = 0; p < ns; ++p) {
        const int idx = sector[static_cast<std::size_t>(p)];
        if (idx % dim == idx / dim) t_solve.emplace_back(0, p, cd{1.0, 0.0});
    }

    SuperOp L0(ns, ns), A(ns, ns);
    L0.setFromTriplets(t_full.begin(), t_full.end());
    A.setFromTriplets(t_solve.begin(), t_solve.end());
    A.makeCompressed();

    Eigen::SparseLU<SuperOp> lu;
    lu.compute(A);
    require(lu.info() == Eigen::Success, Errc::singular_system, "steady_state",
            "factorization of the sector system failed");
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(ns);
    b(0) = 1.0;
    const Eigen::VectorXcd x = lu.solve(b);
    require(lu.info() == Eigen::Success, Errc::singular_system, "steady_state",
            "solve of the sector system failed");

    const double scale = superop_scale(L);
    const double resid = (L0 * x).norm() / (scale * x.norm());
    require(resid < tol, Errc::not_converged, "steady_state",
            "null-space residual above tolerance");
    return assemble_state(x, sector, space, resid);
}

DensityMatrix steady_state_propagation(const SuperOp& L, const FockSpace& space, double tol) {
    const int dim = space.hilbert_dim();
    const int N = space.cutoff;

    // diagonal product initial state with Poisson-like weights near the
    // semiclassical photon number
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<long long>(dim) * dim);
    {
        std::vector<double> w(static_cast<std::size_t>(N));
        const double nbar = std::max(1.0, 0.25 * N);
        double logp = 0.0;
        for (int n = 0; n < N; ++n) {
            if (n > 0) logp += std::log(nbar / n);
            w[static_cast<std::size_t>(n)] = std::exp(logp);
        }
        double norm = 0.0;
        for (const double x : w) norm += x;
        for (double& x : w) x /= norm;
        for (int n1 = 0; n1 < N; ++n1)
            for (int n2 = 0; n2 < N; ++n2) {
                const int h = n1 * N + n2;
                v(static_cast<long long>(h) * (dim + 1)) =
                    w[static_cast<std::size_t>(n1)] * w[static_cast<std::size_t>(n2)];
            }
    }

    const double scale = superop_scale(L);
    const double dt = 2.5 / scale;
    const long long max_steps = 4000000;
    double resid = 1.0;
    Eigen::VectorXcd k1, k2, k3, k4;
    for (long long step = 0; step < max_steps; ++step) {
        k1 = L * v;
        if (step % 64 == 0) {
            resid = k1.norm() / (scale * v.norm());
            if (resid < tol) break;
        }
        k2 = L * (v + 0.5 * dt * k1);
        k3 = L * (v + 0.5 * dt * k2);
        k4 = L * (v + dt * k3);
        v += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    require(resid < tol, Errc::not_converged, "steady_state",
            "propagation did not reach the residual target");

    DensityMatrix out;
    out.cutoff = space.cutoff;
    out.residual = resid;
    out.rho = Eigen::Map<const Eigen::MatrixXcd>(v.data(), dim, dim);
    out.rho = 0.5 * (out.rho + out.rho.adjoint()).eval();
    out.rho /= out.rho.trace().real();
    return out;
}

}  // namespace

DensityMatrix steady_state(const SuperOp& L, const FockSpace& space, SteadyStateMethod method,
                           double tol) {
    DensityMatrix out = (method == SteadyStateMethod::null_space)
                            ? steady_state_null_space(L, space, tol)
                            : steady_state_propagation(L, space, tol);
    out.validate("steady_state");
    require(out.boundary_population() <= 1e-4, Errc::cutoff_dominated, "steady_state",
            "boundary-state population exceeds 1e-4; increase the cutoff");
    return out;
}

PhaseDistribution phase_distribution_lme(const DensityMatrix& dm, int n_bins) {
    const int N = dm.cutoff;
    std::vector<cd> c(static_cast<std::size_t>(N), cd{0.0, 0.0});  // c[k], k = 0..N-1
    for (int k = 0; k < N; ++k) {
        cd s{0.0, 0.0};
        for (int n1 = 0; n1 + k < N; ++n1)
            for (int n2 = 0; n2 + k < N; ++n2)
                s += dm.rho((n1 + k) * N + n2, n1 * N + (n2 + k));
        c[static_cast<std::size_t>(k)] = s;
    }

    PhaseDistribution out;
    out.method = "lindblad";
    const double h = 2.0 * PI / n_bins;
    out.theta.resize(static_cast<std::size_t>(n_bins));
    out.density.resize(static_cast<std::size_t>(n_bins));
    double min_v = 0.0;
    for (int i = 0; i < n_bins; ++i) {
        const double th = -PI + (i + 0.5) * h;
        double v = c[0].real();
        for (int k = 1; k < N; ++k)
            v += 2.0 * (c[static_cast<std::size_t>(k)] * std::exp(-I * (double(k) * th))).real();
        v /= 2.0 * PI;
        min_v = std::min(min_v, v);
        out.theta[static_cast<std::size_t>(i)] = th;
        out.density[static_cast<std::size_t>(i)] = v;
    }
    require(min_v >= -1e-8, Errc::not_converged, "phase_distribution_lme",
            "distribution negative beyond the 1e-8 tolerance");
    double sum = 0.0;
    for (double& v : out.density) {
        if (v < 0.0) v = 0.0;
        sum += v * h;
    }
    for (double& v : out.density) v /= sum;
    return out;
}

}  // namespace qsync
