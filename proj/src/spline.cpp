#include "bcor/spline.hpp"

#include <stdexcept>
#include <vector>

namespace bcor {

Eigen::MatrixXd bspline_basis(int T, int d, int degree) {
  if (degree < 1) throw std::invalid_argument("bspline_basis: degree >= 1");
  if (d < degree + 1)
    throw std::invalid_argument("bspline_basis: need d >= degree + 1");
  if (T < d) throw std::invalid_argument("bspline_basis: need T >= d");
  const int p = degree;
  const int n_knots = d + p + 1;
  const int n_interior = d - p - 1;
  const double a = 1.0, b = static_cast<double>(T);
  // Clamped knot vector: p+1 copies of each endpoint, equal interior spacing.
  std::vector<double> u(n_knots);
  for (int i = 0; i <= p; ++i) u[i] = a;
  for (int j = 1; j <= n_interior; ++j)
    u[p + j] = a + (b - a) * j / (n_interior + 1);
  for (int i = d; i < n_knots; ++i) u[i] = b;

  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(T, d);
  std::vector<double> nj(d + p + 1);
  for (int row = 0; row < T; ++row) {
    double t = a + row;
    // Degree-0 seed: indicator of the half-open knot span, with the last
    // basis function owning the right endpoint.
    for (int i = 0; i < d + p; ++i)
      nj[i] = (u[i] <= t && t < u[i + 1]) ? 1.0 : 0.0;
    if (t == b) nj[d - 1] = 1.0;
    // Cox-de Boor triangle up to the target degree.
    for (int q = 1; q <= p; ++q) {
      for (int i = 0; i + q < d + p; ++i) {
        double left = 0.0, right = 0.0;
        if (u[i + q] != u[i]) left = (t - u[i]) / (u[i + q] - u[i]) * nj[i];
        if (u[i + q + 1] != u[i + 1])
          right = (u[i + q + 1] - t) / (u[i + q + 1] - u[i + 1]) * nj[i + 1];
        nj[i] = left + right;
      }
    }
    for (int j = 0; j < d; ++j) basis(row, j) = nj[j];
  }
  return basis;
}

}  // namespace bcor
