#include "ivs/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace ivs {

void LinearSystem::validate() const {
    if (A.rows() != A.cols()) throw ConfigError("system matrix A must be square");
    if (B.rows() != A.rows()) throw ConfigError("B row count must match state dimension");
    if (C.cols() != A.rows()) throw ConfigError("C column count must match state dimension");
    if (!A.allFinite() || !B.allFinite() || !C.allFinite()) {
        throw ConfigError("system matrices must be finite");
    }
}

bool LinearSystem::same_as(const LinearSystem& o) const {
    return A == o.A && B == o.B && C == o.C;
}

Eigen::VectorXd AffinePropagator::advance(const Eigen::VectorXd& x0,
                                          const Eigen::VectorXd& u) const {
    return state_map * x0 + input_map * u;
}

AffinePropagator affine_propagator(const LinearSystem& sys, double t) {
    const int d = sys.state_dim();
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * d, 2 * d);
    block.topLeftCorner(d, d) = sys.A * t;
    block.topRightCorner(d, d) = Eigen::MatrixXd::Identity(d, d) * t;
    Eigen::MatrixXd e = block.exp();
    AffinePropagator p;
    p.state_map = e.topLeftCorner(d, d);
    p.input_map = e.topRightCorner(d, d) * sys.B;
    if (!p.state_map.allFinite() || !p.input_map.allFinite()) {
        throw NumericError("matrix exponential produced non-finite values");
    }
    return p;
}

Eigen::VectorXd propagate_affine(const LinearSystem& sys, const Eigen::VectorXd& x0,
                                 const Eigen::VectorXd& u, double t) {
    Eigen::VectorXd x = affine_propagator(sys, t).advance(x0, u);
    if (!x.allFinite()) {
        throw NumericError("state became non-finite during propagation");
    }
    return x;
}

}  // namespace ivs
