#pragma once

#include <Eigen/Dense>

namespace respire {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MatrixR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace respire
