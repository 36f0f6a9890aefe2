#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dmgrid {

using Vec = Eigen::VectorXd;

/// Status codes shared by the C++ core and the C API.
enum class ErrorCode : int {
    Ok = 0,
    InvalidArgument = 1,
    Config = 2,
    NumericFault = 3,
    RoutingDegenerate = 4,
    InfeasibleSeparation = 5,
    Calibration = 6,
    Io = 7,
    Internal = 99,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorCode::Config, what) {}
};

class NumericFault : public Error {
public:
    NumericFault(std::size_t unit, const std::string& what)
        : Error(ErrorCode::NumericFault, what), unit_(unit) {}
    std::size_t unit() const noexcept { return unit_; }

private:
    std::size_t unit_;
};

class RoutingDegenerate : public Error {
public:
    explicit RoutingDegenerate(const std::string& what) : Error(ErrorCode::RoutingDegenerate, what) {}
};

class InfeasibleSeparation : public Error {
public:
    explicit InfeasibleSeparation(const std::string& what)
        : Error(ErrorCode::InfeasibleSeparation, what) {}
};

class CalibrationError : public Error {
public:
    explicit CalibrationError(const std::string& what) : Error(ErrorCode::Calibration, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorCode::Io, what) {}
};

/// Cosine similarity; 0 when either side has (near) zero norm.
inline double cosine(const Vec& a, const Vec& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na < 1e-12 || nb < 1e-12) return 0.0;
    return a.dot(b) / (na * nb);
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace dmgrid
