#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace riskplan {

using Vec = std::vector<double>;

// Tolerance for probability normalization checks on model inputs.
inline constexpr double kProbTol = 1e-9;

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ModelError : public Error {
public:
    explicit ModelError(const std::string& msg) : Error(msg) {}
};

class DimensionMismatchError : public Error {
public:
    explicit DimensionMismatchError(const std::string& msg) : Error(msg) {}
};

class ImpossibleObservationError : public Error {
public:
    explicit ImpossibleObservationError(const std::string& msg) : Error(msg) {}
};

class InvalidDistributionError : public Error {
public:
    explicit InvalidDistributionError(const std::string& msg) : Error(msg) {}
};

class NonFiniteValueError : public Error {
public:
    explicit NonFiniteValueError(const std::string& msg) : Error(msg) {}
};

class EmptySamplesError : public Error {
public:
    explicit EmptySamplesError(const std::string& msg) : Error(msg) {}
};

class IterationCapError : public Error {
public:
    explicit IterationCapError(const std::string& msg) : Error(msg) {}
};

class TooLargeError : public Error {
public:
    explicit TooLargeError(const std::string& msg) : Error(msg) {}
};

class NoFeasibleLayoutError : public Error {
public:
    explicit NoFeasibleLayoutError(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace riskplan
