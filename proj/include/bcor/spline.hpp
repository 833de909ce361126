#pragma once

#include <Eigen/Dense>

namespace bcor {

// Clamped B-spline basis of the given degree on [1, T] with equally spaced
// interior knots, evaluated at t = 1..T (de Boor recursion). Rows form a
// partition of unity; all entries lie in [0, 1]. Requires T >= d and
// d >= degree + 1.
Eigen::MatrixXd bspline_basis(int T, int d, int degree = 3);

}  // namespace bcor
