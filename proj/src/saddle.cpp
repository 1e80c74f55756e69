#include "qsync/saddle.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace qsync {

namespace {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

// Deterministic drift of the complex Langevin equation in the co-rotating
// frame: A phidot = -P^R(nu) phi + diag(r_m^2 lambda1 conj(phi_m) phi_m^2).
struct Drift {
    Mat2 P;     // P^R_mn(nu) with radius-ratio weights
    Mat2 Ainv;  // inverse friction matrix
    std::array<double, 2> r2;
    cd lambda1;

    Eigen::Vector2cd operator()(const Eigen::Vector2cd& phi) const {
        Eigen::Vector2cd d = -P * phi;
        for (int m = 0; m < 2; ++m)
            d(m) += r2[m] * lambda1 * std::conj(phi(m)) * phi(m) * phi(m);
        return Ainv * d;
    }
};

Drift make_drift(const SelfEnergyModel& model, double nu, double omega1, double omega2,
                 double r1, double r2, const QuarticCouplings& couplings) {
    const Mat2 PiR = model.eval(nu).PiR;
    const Mat2 dPiR = model.derivative(nu);
    const double w[2] = {omega1, omega2};
    const double r[2] = {r1, r2};
    Mat2 P, A;
    for (int m = 0; m < 2; ++m)
        for (int n = 0; n < 2; ++n) {
            const double weight = r[n] / r[m];
            P(m, n) = (m == n ? cd{nu - w[n], 0.0} : cd{0.0, 0.0}) - PiR(m, n) * weight;
            A(m, n) = I * ((m == n ? 1.0 : 0.0) - dPiR(m, n) * weight);
        }
    const cd det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    require(std::abs(det) > 1e-8 * A.norm() * A.norm() + 1e-300, Errc::singular_friction,
            "stability_of_saddle", "friction matrix is numerically singular");
    Mat2 Ainv;
    Ainv << A(1, 1), -A(0, 1), -A(1, 0), A(0, 0);
    Ainv /= det;
    return Drift{P, Ainv, {r1 * r1, r2 * r2}, couplings.lambda1};
}

std::vector<cd> drift_eigenvalues(const Drift& drift, double theta0) {
    // real 4x4 Jacobian at the saddle phi = (e^{-i theta0/2}, e^{+i theta0/2})
    const Eigen::Vector2cd phi0{std::exp(-I * (theta0 / 2.0)), std::exp(I * (theta0 / 2.0))};
    const double h = 1e-7;
    Mat4 J;
    for (int k = 0; k < 4; ++k) {
        Eigen::Vector2cd dp = Eigen::Vector2cd::Zero();
        const cd bump = (k % 2 == 0) ? cd{h, 0.0} : cd{0.0, h};
        dp(k / 2) = bump;
        const Eigen::Vector2cd gp = drift(phi0 + dp);
        const Eigen::Vector2cd gm = drift(phi0 - dp);
        for (int m = 0; m < 2; ++m) {
            J(2 * m, k) = (gp(m).real() - gm(m).real()) / (2.0 * h);
            J(2 * m + 1, k) = (gp(m).imag() - gm(m).imag()) / (2.0 * h);
        }
    }
    Eigen::EigenSolver<Mat4> es(J);
    std::vector<cd> ev(4);
    for (int k = 0; k < 4; ++k) ev[k] = es.eigenvalues()(k);
    std::sort(ev.begin(), ev.end(),
              [](const cd& a, const cd& b) { return a.real() > b.real(); });
    return ev;
}

bool is_stable(const std::vector<cd>& ev) {
    // all eigenvalues in the closed left half plane with exactly one zero mode
    double scale = 1e-300;
    for (const cd& l : ev) scale = std::max(scale, std::abs(l));
    int zero_modes = 0;
    for (const cd& l : ev) {
        if (std::abs(l) <= 1e-6 * scale) {
            ++zero_modes;
        } else if (l.real() > 1e-9 * scale) {
            return false;
        }
    }
    return zero_modes == 1;
}

}  // namespace

std::array<cd, 2> saddle_residuals(const SelfEnergyModel& model, double omega1, double omega2,
                                   const QuarticCouplings& couplings, double nu, double theta0,
                                   double r1, double r2) {
    const Mat2 PiR = model.eval(nu).PiR;
    const double w[2] = {omega1, omega2};
    const double sgn[2] = {1.0, -1.0};
    const double r[2] = {r1, r2};
    std::array<cd, 2> F;
    for (int n = 0; n < 2; ++n) {
        const double ratio = std::pow(r2 / r1, sgn[n]);
        F[n] = nu - w[n] - PiR(0, 0) - std::exp(I * (sgn[n] * theta0)) * PiR(0, 1) * ratio -
               couplings.lambda1 * r[n] * r[n];
    }
    return F;
}

std::pair<double, double> solve_single(const SingleOscillatorParams& params,
                                       const QuarticCouplings& couplings) {
    require(params.gamma1 > 0.0 && params.gamma2 > 0.0, Errc::invalid_model, "solve_single",
            "rates must be positive");
    // P^R_nu = nu - w0 - i g1/2; r^2 = P^R_nu / lambda1 is real and positive
    // exactly at nu = w0.
    const cd PR{0.0, -0.5 * params.gamma1};
    const cd r2 = PR / couplings.lambda1;
    require(std::abs(r2.imag()) < 1e-12 * std::abs(r2) && r2.real() > 0.0, Errc::no_limit_cycle,
            "solve_single", "no frequency yields a real positive squared radius");
    return {params.omega0, std::sqrt(r2.real())};
}

SaddleSolution solve_pair_markovian(const PairParams& params) {
    require(params.gamma1 > 0.0 && params.gamma2 > 0.0 && params.D >= 0.0, Errc::invalid_model,
            "solve_pair_markovian", "invalid rates");
    const double Delta = params.delta();
    SaddleSolution sol;
    sol.omega1 = params.omega1;
    sol.omega2 = params.omega2;
    const SelfEnergyModel model(MarkovianPair{params.gamma1, params.D});
    const QuarticCouplings couplings = QuarticCouplings::stuart_landau(params.gamma2);

    const bool locked = params.D > 0.0 && std::abs(Delta) <= params.D;
    if (!locked) {
        const double r2 = (params.gamma1 - params.D) / params.gamma2;
        require(r2 > 0.0, Errc::no_limit_cycle, "solve_pair_markovian",
                "squared radius not positive on the unsynchronized branch");
        sol.branch = Branch::unsynchronized;
        sol.nu = std::numeric_limits<double>::quiet_NaN();
        sol.theta0 = std::numeric_limits<double>::quiet_NaN();
        sol.r1 = sol.r2 = std::sqrt(r2);
        sol.residual = 0.0;
        return sol;
    }

    const double root = std::sqrt(std::max(0.0, 1.0 - (Delta / params.D) * (Delta / params.D)));
    const double r2 = (params.gamma1 - params.D + params.D * root) / params.gamma2;
    require(r2 > 0.0, Errc::no_limit_cycle, "solve_pair_markovian",
            "squared radius not positive inside the tongue");
    sol.branch = Branch::synchronized;
    sol.nu = 0.5 * (params.omega1 + params.omega2);
    sol.r1 = sol.r2 = std::sqrt(r2);
    // stable branch: sin(theta0) = -Delta/D with cos(theta0) = -root < 0
    sol.theta0 = wrap_angle(std::atan2(-Delta / params.D, -root));
    const auto F = saddle_residuals(model, params.omega1, params.omega2, couplings, sol.nu,
                                    sol.theta0, sol.r1, sol.r2);
    sol.residual = std::max(std::abs(F[0]), std::abs(F[1]));
    sol.stability = stability_of_saddle(sol, model, couplings);
    return sol;
}

std::vector<cd> stability_of_saddle(const SaddleSolution& sol, const SelfEnergyModel& model,
                                    const QuarticCouplings& couplings) {
    require(sol.branch == Branch::synchronized, Errc::invalid_model, "stability_of_saddle",
            "stability is defined for the synchronized branch");
    const Drift drift =
        make_drift(model, sol.nu, sol.omega1, sol.omega2, sol.r1, sol.r2, couplings);
    return drift_eigenvalues(drift, sol.theta0);
}

std::vector<SaddleSolution> solve_pair_nonmarkovian_all(
    const SelfEnergyModel& model, double omega1, double omega2,
    const QuarticCouplings& couplings, const NonMarkovianSolveOptions& opts) {
    // residual vector in the 4 real unknowns x = (nu, theta0, r1, r2)
    auto residual_vec = [&](const Vec4& x) -> Vec4 {
        const auto F =
            saddle_residuals(model, omega1, omega2, couplings, x(0), x(1), x(2), x(3));
        return Vec4{F[0].real(), F[0].imag(), F[1].real(), F[1].imag()};
    };

    auto [wlo, whi] = model.frequency_window();
    double pad = opts.window_pad;
    if (pad <= 0.0) {
        pad = 0.5 * std::abs(omega1 - omega2);
        if (std::isfinite(whi - wlo)) pad = std::max(pad, 0.05 * (whi - wlo));
        if (pad == 0.0) pad = 0.1 * std::max({std::abs(omega1), std::abs(omega2), 1.0});
    }
    double lo = std::min(omega1, omega2) - pad;
    double hi = std::max(omega1, omega2) + pad;
    if (std::isfinite(wlo)) lo = std::max(lo, wlo);
    if (std::isfinite(whi)) hi = std::min(hi, whi);
    if (!(lo < hi)) {
        lo = std::min(omega1, omega2);
        hi = std::max(omega1, omega2);
        if (lo == hi) {
            lo -= 1e-6;
            hi += 1e-6;
        }
    }

    const double freq_scale =
        std::max({std::abs(omega1), std::abs(omega2), std::abs(hi - lo), 1e-12});

    auto initial_radius = [&](double nu0) -> double {
        // Markovian estimate with D <- -2 Im PiR12(nu0)
        const Mat2 PiR = model.eval(nu0).PiR;
        const double Deff = -2.0 * PiR(0, 1).imag();
        const double g1m = 2.0 * PiR(0, 0).imag() + std::abs(Deff);
        const double g2 = -2.0 * couplings.lambda1.imag();
        double r2 = (g2 > 0.0) ? (g1m / g2) : 1.0;
        if (!(r2 > 0.0)) r2 = 1.0;
        return std::sqrt(r2);
    };

    std::vector<SaddleSolution> roots;
    const double theta_starts[3] = {0.5 * PI, PI, 1.5 * PI};

    for (int g = 0; g < opts.nu_grid; ++g) {
        const double nu0 = lo + (hi - lo) * (g + 0.5) / opts.nu_grid;
        for (const double th0 : theta_starts) {
            Vec4 x{nu0, th0, initial_radius(nu0), initial_radius(nu0)};
            bool converged = false;
            for (int it = 0; it < opts.max_iterations; ++it) {
                Vec4 F;
                try {
                    F = residual_vec(x);
                } catch (const Error&) {
                    break;  // stepped outside the model window
                }
                const double fn = F.cwiseAbs().maxCoeff();
                if (fn < opts.tolerance) {
                    converged = true;
                    break;
                }
                // finite-difference Jacobian
                Mat4 J;
                bool jac_ok = true;
                for (int k = 0; k < 4; ++k) {
                    const double h =
                        1e-7 * std::max(std::abs(x(k)), (k == 0) ? freq_scale : 1.0);
                    Vec4 xp = x, xm = x;
                    xp(k) += h;
                    xm(k) -= h;
                    try {
                        J.col(k) = (residual_vec(xp) - residual_vec(xm)) / (2.0 * h);
                    } catch (const Error&) {
                        jac_ok = false;
                        break;
                    }
                }
                if (!jac_ok) break;
                const Vec4 step = J.fullPivLu().solve(F);
                if (!step.allFinite()) break;
                // damped update keeping the radii positive
                double lambda = 1.0;
                bool accepted = false;
                for (int half = 0; half < 25; ++half) {
                    Vec4 xn = x - lambda * step;
                    xn(2) = std::abs(xn(2));
                    xn(3) = std::abs(xn(3));
                    if (xn(2) < 1e-12) xn(2) = 1e-12;
                    if (xn(3) < 1e-12) xn(3) = 1e-12;
                    try {
                        if (residual_vec(xn).cwiseAbs().maxCoeff() < fn) {
                            x = xn;
                            accepted = true;
                            break;
                        }
                    } catch (const Error&) {
                    }
                    lambda *= 0.5;
                }
                if (!accepted) break;
            }
            if (!converged) continue;

            SaddleSolution sol;
            sol.nu = x(0);
            sol.theta0 = wrap_angle(x(1));
            sol.r1 = x(2);
            sol.r2 = x(3);
            sol.branch = Branch::synchronized;
            sol.omega1 = omega1;
            sol.omega2 = omega2;
            const auto F = saddle_residuals(model, omega1, omega2, couplings, sol.nu,
                                            sol.theta0, sol.r1, sol.r2);
            sol.residual = std::max(std::abs(F[0]), std::abs(F[1]));
            if (sol.residual > opts.accept_residual) continue;
            if (!(sol.r1 > 1e-9 && sol.r2 > 1e-9)) continue;

            bool duplicate = false;
            for (const auto& r : roots) {
                if (std::abs(r.nu - sol.nu) < 1e-7 * freq_scale &&
                    std::abs(wrap_angle(r.theta0 - sol.theta0)) < 1e-6 &&
                    std::abs(r.r1 - sol.r1) < 1e-6 * (1.0 + r.r1) &&
                    std::abs(r.r2 - sol.r2) < 1e-6 * (1.0 + r.r2)) {
                    duplicate = true;
                    break;
                }
            }
            if (duplicate) continue;
            try {
                sol.stability = stability_of_saddle(sol, model, couplings);
            } catch (const Error&) {
                continue;
            }
            roots.push_back(std::move(sol));
        }
    }
    std::sort(roots.begin(), roots.end(),
              [](const SaddleSolution& a, const SaddleSolution& b) { return a.nu < b.nu; });
    return roots;
}

std::optional<SaddleSolution> solve_pair_nonmarkovian(
    const SelfEnergyModel& model, double omega1, double omega2,
    const QuarticCouplings& couplings, const NonMarkovianSolveOptions& opts) {
    const auto roots = solve_pair_nonmarkovian_all(model, omega1, omega2, couplings, opts);
    for (const auto& r : roots) {
        if (is_stable(r.stability)) return r;  // roots sorted by nu
    }
    return std::nullopt;
}

}  // namespace qsync
