#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace chord {

using Vec = Eigen::VectorXd;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument outside an operation's domain (bad time, index, size).
struct DomainError : Error {
    using Error::Error;
};

// A coefficient or head would divide by alpha/sigma below the schedule floor.
struct IllConditionedError : Error {
    IllConditionedError(const std::string& what, double time) : Error(what), time(time) {}
    double time;
};

// Posterior responsibilities collapsed numerically.
struct DegenerateError : Error {
    using Error::Error;
};

// State left the finite/bounded region; carries the last good state.
struct DivergenceError : Error {
    DivergenceError(const std::string& what, Vec last_valid) : Error(what), last_valid(std::move(last_valid)) {}
    Vec last_valid;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace chord
