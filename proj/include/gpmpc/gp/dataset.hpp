#pragma once

#include <stdexcept>

#include <Eigen/Dense>

namespace gpmpc::gp {

/// Training data: one feature vector per row of X, label y[n].
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;

  Eigen::Index size() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }

  void validate() const {
    if (X.rows() != y.size()) throw std::invalid_argument("Dataset: X rows and y length differ");
    if (!X.allFinite() || !y.allFinite()) throw std::invalid_argument("Dataset: non-finite entry");
  }
};

}  // namespace gpmpc::gp
