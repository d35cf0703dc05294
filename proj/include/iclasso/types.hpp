#pragma once

#include <Eigen/Dense>

namespace iclasso {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

} // namespace iclasso
