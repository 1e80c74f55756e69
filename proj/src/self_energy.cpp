#include "qsync/self_energy.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace qsync {

namespace {

// Fritsch-Carlson monotone cubic slopes for one real series.
std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> d(n, 0.0), h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x[i + 1] - x[i];
        delta[i] = (y[i + 1] - y[i]) / h[i];
    }
    if (n == 2) {
        d[0] = d[1] = delta[0];
        return d;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            d[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    auto endpoint = [](double h0, double h1, double d0, double d1) {
        double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (s * d0 <= 0.0) s = 0.0;
        else if (d0 * d1 <= 0.0 && std::abs(s) > 3.0 * std::abs(d0)) s = 3.0 * d0;
        return s;
    };
    d[0] = endpoint(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = endpoint(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    return d;
}

double pchip_eval(const std::vector<double>& x, const std::vector<double>& y,
                  const std::vector<double>& d, std::size_t i, double t) {
    const double h = x[i + 1] - x[i];
    const double s = (t - x[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * y[i] + h * h10 * d[i] + h01 * y[i + 1] + h * h11 * d[i + 1];
}

}  // namespace

namespace detail {

struct TabulatedInterp {
    TabulatedSelfEnergy tab;
    std::vector<std::vector<double>> series;  // 8 real columns
    std::vector<std::vector<double>> slopes;

    explicit TabulatedInterp(const TabulatedSelfEnergy& t) : tab(t) {
        auto push = [&](const std::vector<cd>& col) {
            std::vector<double> re(col.size()), im(col.size());
            for (std::size_t i = 0; i < col.size(); ++i) {
                re[i] = col[i].real();
                im[i] = col[i].imag();
            }
            series.push_back(std::move(re));
            series.push_back(std::move(im));
        };
        push(t.PiR11);
        push(t.PiR12);
        push(t.PiK11);
        push(t.PiK12);
        if (t.order >= 3) {
            for (const auto& s : series) slopes.push_back(pchip_slopes(t.omega, s));
        }
    }

    double eval_series(std::size_t c, double w) const {
        const auto& x = tab.omega;
        auto it = std::upper_bound(x.begin(), x.end(), w);
        std::size_t i = (it == x.begin()) ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
        if (i + 1 >= x.size()) i = x.size() - 2;
        if (tab.order >= 3) return pchip_eval(x, series[c], slopes[c], i, w);
        const double s = (w - x[i]) / (x[i + 1] - x[i]);
        return (1.0 - s) * series[c][i] + s * series[c][i + 1];
    }

    cd eval_col(std::size_t pair, double w) const {
        return {eval_series(2 * pair, w), eval_series(2 * pair + 1, w)};
    }
};

}  // namespace detail

namespace {

cd lorentz_resonant(const LorentzianGain& m, double w) {
    // Im part is +gain_strength * width^2 / ((w - w_ex)^2 + width^2):
    // non-negative, peaks at omega_ex; retarded pole in the lower half plane.
    return -m.gain_strength * m.width / (cd{w - m.omega_ex, m.width});
}

cd lorentz_resonant_deriv(const LorentzianGain& m, double w) {
    const cd z{w - m.omega_ex, m.width};
    return m.gain_strength * m.width / (z * z);
}

}  // namespace

SelfEnergyModel::SelfEnergyModel(TabulatedSelfEnergy m) : v_(std::move(m)) {
    const auto& t = std::get<TabulatedSelfEnergy>(v_);
    require(t.omega.size() >= 2, Errc::invalid_model, "SelfEnergyModel",
            "tabulated grid needs at least 2 nodes");
    require(t.PiR11.size() == t.omega.size() && t.PiR12.size() == t.omega.size() &&
                t.PiK11.size() == t.omega.size() && t.PiK12.size() == t.omega.size(),
            Errc::invalid_model, "SelfEnergyModel", "column lengths differ from grid");
    for (std::size_t i = 0; i + 1 < t.omega.size(); ++i)
        require(t.omega[i] < t.omega[i + 1], Errc::invalid_model, "SelfEnergyModel",
                "frequency grid must be strictly increasing");
    interp_ = std::make_shared<const detail::TabulatedInterp>(t);
    validate();
}

void SelfEnergyModel::validate() const {
    // PSD of i*PiK spot-checked on a few frequencies inside the window.
    auto [lo, hi] = frequency_window();
    if (!std::isfinite(lo)) {
        lo = -1.0;
        hi = 1.0;
    }
    for (int k = 0; k < 5; ++k) {
        const double w = lo + (hi - lo) * (k + 0.5) / 5.0;
        check_self_energy_invariants(eval(w));
    }
}

void check_self_energy_invariants(const SelfEnergyEval& se) {
    const double scale = se.PiR.norm() + se.PiK.norm() + 1e-300;
    require(std::abs(se.PiR(0, 1) - se.PiR(1, 0)) < 1e-12 * scale &&
                std::abs(se.PiR(0, 0) - se.PiR(1, 1)) < 1e-12 * scale &&
                std::abs(se.PiK(0, 1) - se.PiK(1, 0)) < 1e-12 * scale &&
                std::abs(se.PiK(0, 0) - se.PiK(1, 1)) < 1e-12 * scale,
            Errc::invalid_model, "eval_self_energy", "self-energy matrix not symmetric");
    const Mat2 K = I * se.PiK;
    require((K - K.adjoint()).norm() < 1e-10 * (K.norm() + 1e-300), Errc::invalid_model,
            "eval_self_energy", "i*PiK not Hermitian");
    Eigen::SelfAdjointEigenSolver<Mat2> es(K);
    require(es.eigenvalues().minCoeff() >= -1e-12 * (K.norm() + 1e-300), Errc::invalid_model,
            "eval_self_energy", "i*PiK has a negative eigenvalue");
}

SelfEnergyEval SelfEnergyModel::eval(double omega) const {
    SelfEnergyEval out;
    if (const auto* m = std::get_if<MarkovianPair>(&v_)) {
        const double g1 = m->gamma1, D = m->D;
        out.PiR << -0.5 * I * (D - g1), -0.5 * I * D, -0.5 * I * D, -0.5 * I * (D - g1);
        out.PiK << -I * (D + g1), -I * D, -I * D, -I * (D + g1);
    } else if (const auto* m = std::get_if<LorentzianGain>(&v_)) {
        const cd res = lorentz_resonant(*m, omega);
        const cd diag = -0.5 * I * m->background_loss + res;
        const cd off = -m->cross_sign * res;
        out.PiR << diag, off, off, diag;
        const double p = res.imag();  // >= 0 by construction
        const double kap = m->background_loss + m->kappa_extra;
        out.PiK << -I * (2.0 * p + kap), I * (2.0 * p * m->cross_sign),
            I * (2.0 * p * m->cross_sign), -I * (2.0 * p + kap);
    } else {
        const auto& t = std::get<TabulatedSelfEnergy>(v_);
        require(omega >= t.omega.front() && omega <= t.omega.back(), Errc::out_of_range,
                "eval_self_energy", "frequency outside tabulated range");
        const cd r11 = interp_->eval_col(0, omega), r12 = interp_->eval_col(1, omega);
        const cd k11 = interp_->eval_col(2, omega), k12 = interp_->eval_col(3, omega);
        out.PiR << r11, r12, r12, r11;
        out.PiK << k11, k12, k12, k11;
    }
    return out;
}

Mat2 SelfEnergyModel::derivative(double omega) const {
    Mat2 d = Mat2::Zero();
    if (std::holds_alternative<MarkovianPair>(v_)) return d;
    if (const auto* m = std::get_if<LorentzianGain>(&v_)) {
        const cd dr = lorentz_resonant_deriv(*m, omega);
        d << dr, -m->cross_sign * dr, -m->cross_sign * dr, dr;
        return d;
    }
    const auto& t = std::get<TabulatedSelfEnergy>(v_);
    auto it = std::upper_bound(t.omega.begin(), t.omega.end(), omega);
    std::size_t i = (it == t.omega.begin()) ? 0 : static_cast<std::size_t>(it - t.omega.begin()) - 1;
    if (i + 1 >= t.omega.size()) i = t.omega.size() - 2;
    const double h = t.fd_step_factor * (t.omega[i + 1] - t.omega[i]);
    require(omega - h >= t.omega.front() && omega + h <= t.omega.back(), Errc::out_of_range,
            "self_energy_derivative", "derivative stencil leaves tabulated range");
    const Mat2 hi = eval(omega + h).PiR;
    const Mat2 lo = eval(omega - h).PiR;
    return (hi - lo) / (2.0 * h);
}

std::pair<double, double> SelfEnergyModel::frequency_window() const {
    if (const auto* m = std::get_if<LorentzianGain>(&v_))
        return {m->omega_ex - 20.0 * m->width, m->omega_ex + 20.0 * m->width};
    if (const auto* t = std::get_if<TabulatedSelfEnergy>(&v_))
        return {t->omega.front(), t->omega.back()};
    const double inf = std::numeric_limits<double>::infinity();
    return {-inf, inf};
}

SelfEnergyModel SelfEnergyModel::from_csv(const std::string& path, int order) {
    std::ifstream in(path);
    require(in.good(), Errc::io, "SelfEnergyModel::from_csv", "cannot open " + path);
    TabulatedSelfEnergy tab;
    tab.order = order;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;  // first non-comment line is the header
            continue;
        }
        std::istringstream ss(line);
        double v[9];
        char comma;
        for (int k = 0; k < 9; ++k) {
            require(static_cast<bool>(ss >> v[k]), Errc::io, "SelfEnergyModel::from_csv",
                    "malformed row: " + line);
            if (k < 8) ss >> comma;
        }
        tab.omega.push_back(v[0]);
        tab.PiR11.emplace_back(v[1], v[2]);
        tab.PiR12.emplace_back(v[3], v[4]);
        tab.PiK11.emplace_back(v[5], v[6]);
        tab.PiK12.emplace_back(v[7], v[8]);
    }
    return SelfEnergyModel(std::move(tab));
}

NoiseMatrices noise_matrix(const SelfEnergyModel& model, double nu, double r1, double r2,
                           double theta0, const QuarticCouplings& couplings) {
    require(r1 > 0.0 && r2 > 0.0, Errc::invalid_model, "noise_matrix", "radii must be positive");
    const SelfEnergyEval se = model.eval(nu);
    const cd phase = std::exp(I * theta0);

    // C_mn = -i (P^K_mn(nu) - Lambda5 delta_mn) with P^K_mn = -e^{i(th_m-th_n)} PiK_mn / (r_m r_n),
    // phases frozen at the saddle value theta0 = theta1 - theta2.
    Mat2 C;
    C(0, 0) = I * se.PiK(0, 0) / (r1 * r1) + I * couplings.lambda5;
    C(1, 1) = I * se.PiK(1, 1) / (r2 * r2) + I * couplings.lambda5;
    C(0, 1) = I * phase * se.PiK(0, 1) / (r1 * r2);
    C(1, 0) = I * std::conj(phase) * se.PiK(1, 0) / (r1 * r2);

    // noise covariance is the Hermitian part
    C = 0.5 * (C + C.adjoint()).eval();

    const double scale = C.norm() + 1e-300;
    Eigen::SelfAdjointEigenSolver<Mat2> es(C);
    require(es.eigenvalues().minCoeff() >= -1e-12 * scale, Errc::not_psd, "noise_matrix",
            "noise correlation matrix has a negative eigenvalue");

    Mat2 B = Mat2::Zero();
    const double c11 = C(0, 0).real();
    if (c11 > 1e-14 * scale) {
        B(0, 0) = std::sqrt(c11);
        B(1, 0) = C(1, 0) / B(0, 0);
        const double rem = C(1, 1).real() - std::norm(B(1, 0));
        B(1, 1) = std::sqrt(std::max(rem, 0.0));
    } else {
        B(1, 1) = std::sqrt(std::max(C(1, 1).real(), 0.0));
    }
    return {C, B};
}

}  // namespace qsync
