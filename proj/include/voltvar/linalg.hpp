#pragma once

#include <Eigen/Dense>

namespace voltvar {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

} // namespace voltvar
