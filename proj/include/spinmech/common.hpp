#pragma once

/**
 * @file   common.hpp
 * @brief  Error type, physical constants and small shared aliases.
 *
 * All quantities are SI unless a name says otherwise. Frequencies are plain
 * Hz except where a variable is explicitly angular (omega_*, lambda).
 */

#include <Eigen/Core>

#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace spinmech {

using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

namespace constants {
inline constexpr double hbar = 1.054571817e-34;         // J s
inline constexpr double k_boltzmann = 1.380649e-23;     // J/K
inline constexpr double mu0_over_4pi = 1e-7;            // T m / A
inline constexpr double zero_field_splitting = 2.8707e9; // Hz
inline constexpr double gamma_e = 2.8e10;               // Hz/T  (2.8 MHz/G)
inline constexpr double gamma_n15 = 4.316e6;            // Hz/T, magnitude
inline constexpr double default_m_eff = 6.0e-14;        // kg
inline constexpr double gauss = 1e-4;                   // T
}  // namespace constants

enum class ErrorCode {
    InvalidArgument,
    OutOfRange,
    NoConvergence,
    AllInvalid,
    SingularPoint,
    DegenerateMap,
    NoPeak,
    NotDecaying,
    EmptyBand,
    Underdetermined,
    NoRoot,
    InvalidProbability,
    UnknownKind,
    Parse,
    Io,
};

std::string_view to_string(ErrorCode code);

/// Library error. The code drives CLI exit status; what() is a one-line diagnostic.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::OutOfRange: return "out of range";
    case ErrorCode::NoConvergence: return "no convergence";
    case ErrorCode::AllInvalid: return "all pixels invalid";
    case ErrorCode::SingularPoint: return "singular point";
    case ErrorCode::DegenerateMap: return "degenerate map";
    case ErrorCode::NoPeak: return "no peak";
    case ErrorCode::NotDecaying: return "not decaying";
    case ErrorCode::EmptyBand: return "empty band";
    case ErrorCode::Underdetermined: return "underdetermined";
    case ErrorCode::NoRoot: return "no root";
    case ErrorCode::InvalidProbability: return "invalid probability";
    case ErrorCode::UnknownKind: return "unknown kind";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::Io: return "i/o error";
    }
    return "error";
}

inline void require(bool condition, ErrorCode code, const std::string& message)
{
    if (!condition) {
        throw Error(code, message);
    }
}

}  // namespace spinmech
