#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace qsync {

using cd = std::complex<double>;
inline constexpr cd I{0.0, 1.0};
inline constexpr double PI = 3.14159265358979323846;

/// Single Stuart-Landau oscillator: linear gain gamma1, two-photon loss gamma2.
struct SingleOscillatorParams {
    double omega0 = 1.0;
    double gamma1 = 1.0;
    double gamma2 = 0.1;
};

/// Two dissipatively coupled Stuart-Landau oscillators.
struct PairParams {
    double omega1 = 1.0;
    double omega2 = 1.0;
    double gamma1 = 1.0;
    double gamma2 = 0.1;
    double D = 0.1;  // dissipative coupling rate

    double delta() const { return omega1 - omega2; }
    double photon_number() const { return gamma1 / (2.0 * gamma2); }
};

/// Quartic vertex entries of the stabilizing nonlinearity. `lambda1` is the
/// conjugated vertex that multiplies r^2 in the saddle-point equation
/// (-i*gamma2/2 for the Stuart-Landau map); `lambda5` couples the noise
/// kernel (-2i*gamma2).
struct QuarticCouplings {
    cd lambda1{0.0, -0.05};
    cd lambda5{0.0, -0.2};

    static QuarticCouplings stuart_landau(double gamma2) {
        return {cd{0.0, -0.5 * gamma2}, cd{0.0, -2.0 * gamma2}};
    }
};

enum class Errc {
    out_of_range,
    invalid_model,
    not_psd,
    no_limit_cycle,
    solver_diverged,
    step_too_large,
    singular_friction,
    not_converged,
    singular_system,
    insufficient_length,
    insufficient_data,
    cutoff_too_small,
    cutoff_dominated,
    config,
    io,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::out_of_range: return "OutOfRange";
        case Errc::invalid_model: return "InvalidModel";
        case Errc::not_psd: return "NotPSD";
        case Errc::no_limit_cycle: return "NoLimitCycle";
        case Errc::solver_diverged: return "SolverDiverged";
        case Errc::step_too_large: return "StepTooLarge";
        case Errc::singular_friction: return "SingularFriction";
        case Errc::not_converged: return "NotConverged";
        case Errc::singular_system: return "SingularSystem";
        case Errc::insufficient_length: return "InsufficientLength";
        case Errc::insufficient_data: return "InsufficientData";
        case Errc::cutoff_too_small: return "CutoffTooSmall";
        case Errc::cutoff_dominated: return "CutoffDominated";
        case Errc::config: return "ConfigError";
        case Errc::io: return "IoError";
    }
    return "UnknownError";
}

/// Runtime failure carrying the failing operation name (used by the CLI to
/// report which solver gave up).
class Error : public std::runtime_error {
  public:
    Error(Errc code, std::string operation, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + " in " + operation + ": " + message),
          code_(code),
          operation_(std::move(operation)) {}

    Errc code() const { return code_; }
    const std::string& operation() const { return operation_; }

  private:
    Errc code_;
    std::string operation_;
};

inline void require(bool cond, Errc code, const std::string& op, const std::string& msg) {
    if (!cond) throw Error(code, op, msg);
}

/// Wrap an angle into (-pi, pi].
inline double wrap_angle(double theta) {
    double t = std::remainder(theta, 2.0 * PI);
    if (t <= -PI) t += 2.0 * PI;
    return t;
}

}  // namespace qsync
