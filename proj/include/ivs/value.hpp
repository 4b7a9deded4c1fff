#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>

#include "ivs/graph.hpp"
#include "ivs/rational.hpp"

namespace ivs {

// Default absolute tolerance when comparing floating-point payloads of
// sections (continuous states, constant signal levels). Symbolic payloads
// (labels, phases) always compare exactly.
inline constexpr double kValueEps = 1e-9;

// Absolute tolerance for numeric atoms in contract checking.
inline constexpr double kCompareEps = 1e-6;

bool approx_equal(double a, double b, double eps);
bool approx_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double eps);

// A zero-length value: what a behavior looks like when restricted to a single
// point. Which fields are populated depends on the data family:
//   - periodic symbolic data: label + phase
//   - periodic numeric data:  scalar + phase
//   - piecewise-constant signals: scalar
//   - continuous systems: state (and the constant input in force, if any)
struct PointValue {
    std::optional<Label> label;
    std::optional<Rational> phase;
    std::optional<double> scalar;
    std::optional<Eigen::VectorXd> state;
    std::optional<Eigen::VectorXd> input;

    bool matches(const PointValue& o, double eps = kValueEps) const;
    std::string str() const;
};

}  // namespace ivs
