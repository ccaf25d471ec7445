#pragma once

#include <stdexcept>
#include <string>

namespace crossdiff {

/// Malformed or inconsistent configuration; messages name the offending key.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A coefficient or reaction function produced an unusable value
/// (non-finite, or a negative damping rate); messages name the node.
class EvaluationError : public std::runtime_error {
public:
    explicit EvaluationError(const std::string& what) : std::runtime_error(what) {}
};

/// A linear solve failed (singular pivot block or unusable system);
/// messages carry the block index and, for sweeps, direction and line.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

/// A time step produced non-finite fields or the norm history blew past
/// the divergence threshold.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace crossdiff
