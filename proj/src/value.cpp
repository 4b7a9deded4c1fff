#include "ivs/value.hpp"

#include <cmath>
#include <sstream>

namespace ivs {

bool approx_equal(double a, double b, double eps) {
    // absolute below unit magnitude, relative above it: large-scale signals
    // (altitudes in meters) would otherwise drown a fixed absolute tolerance
    // in float rounding
    if (!std::isfinite(a) || !std::isfinite(b)) return false;
    return std::abs(a - b) <= eps * std::max({1.0, std::abs(a), std::abs(b)});
}

bool approx_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double eps) {
    if (a.size() != b.size()) return false;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (!approx_equal(a[i], b[i], eps)) return false;
    }
    return true;
}

bool PointValue::matches(const PointValue& o, double eps) const {
    if (label != o.label) return false;
    if (phase != o.phase) return false;
    if (scalar.has_value() != o.scalar.has_value()) return false;
    if (scalar && !approx_equal(*scalar, *o.scalar, eps)) return false;
    if (state.has_value() != o.state.has_value()) return false;
    if (state && !approx_equal(*state, *o.state, eps)) return false;
    if (input.has_value() != o.input.has_value()) return false;
    if (input && !approx_equal(*input, *o.input, eps)) return false;
    return true;
}

std::string PointValue::str() const {
    std::ostringstream os;
    os << "(";
    bool first = true;
    auto sep = [&] {
        if (!first) os << ", ";
        first = false;
    };
    if (label) {
        sep();
        os << *label;
    }
    if (phase) {
        sep();
        os << "phase=" << phase->str();
    }
    if (scalar) {
        sep();
        os << "value=" << *scalar;
    }
    if (state) {
        sep();
        os << "x=[";
        for (Eigen::Index i = 0; i < state->size(); ++i) {
            if (i) os << " ";
            os << (*state)[i];
        }
        os << "]";
    }
    if (input) {
        sep();
        os << "u=[";
        for (Eigen::Index i = 0; i < input->size(); ++i) {
            if (i) os << " ";
            os << (*input)[i];
        }
        os << "]";
    }
    os << ")";
    return os.str();
}

}  // namespace ivs
