#pragma once

#include <stdexcept>
#include <string>

namespace billiards {

/// Invalid table description or geometry that fails validation.
class TableError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Base for failures of the dynamics on a (measure-zero) singular set.
/// Monte Carlo drivers catch these, count the trajectory as discarded and move on.
class TrajectoryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CornerHit : public TrajectoryError {
public:
    using TrajectoryError::TrajectoryError;
};

class CuspOverflow : public TrajectoryError {
public:
    using TrajectoryError::TrajectoryError;
};

class NoIntersection : public TrajectoryError {
public:
    using TrajectoryError::TrajectoryError;
};

class NoReturn : public TrajectoryError {
public:
    using TrajectoryError::TrajectoryError;
};

/// Raised by estimators when the data cannot support the requested fit.
class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace billiards
