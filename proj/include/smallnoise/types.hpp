#pragma once

#include <Eigen/Dense>

namespace smallnoise {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

}  // namespace smallnoise
