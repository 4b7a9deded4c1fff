#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>

#include "ivs/errors.hpp"

namespace ivs {

// A linear time-invariant system x' = Ax + Bu, y = Cx.
struct LinearSystem {
    Eigen::MatrixXd A;  // d x d
    Eigen::MatrixXd B;  // d x m
    Eigen::MatrixXd C;  // k x d

    int state_dim() const { return static_cast<int>(A.rows()); }
    int input_dim() const { return static_cast<int>(B.cols()); }
    int output_dim() const { return static_cast<int>(C.rows()); }

    void validate() const;
    bool same_as(const LinearSystem& o) const;
};

using LinearSystemPtr = std::shared_ptr<const LinearSystem>;

// Propagator for one constant-input segment: x(t) = E(t) x0 + F(t) u with
// E(t) = exp(At) and F(t) = (integral_0^t exp(As) ds) B. Both are obtained
// from a single matrix exponential of the block matrix [[A, I], [0, 0]],
// so propagation over a segment is closed-form rather than stepped.
struct AffinePropagator {
    Eigen::MatrixXd state_map;  // E(t)
    Eigen::MatrixXd input_map;  // F(t)

    Eigen::VectorXd advance(const Eigen::VectorXd& x0, const Eigen::VectorXd& u) const;
};

AffinePropagator affine_propagator(const LinearSystem& sys, double t);

// Convenience: x(t) for constant input u from x0, with finiteness check.
Eigen::VectorXd propagate_affine(const LinearSystem& sys, const Eigen::VectorXd& x0,
                                 const Eigen::VectorXd& u, double t);

}  // namespace ivs
