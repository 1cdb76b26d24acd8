#pragma once
// Eigenvalue arguments of small (near-)unitary complex matrices.

#include <indef/error.hpp>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <vector>

namespace indef {

using CMat = Eigen::MatrixXcd;
using cplx = std::complex<double>;

struct UnitCircleSpectrum {
  std::vector<double> angles;  // arguments in (-pi, pi], one per dimension
  int size() const { return int(angles.size()); }
};

inline UnitCircleSpectrum unit_circle_eigvals(const CMat& M,
                                              double tol_unit = 1e-8) {
  const int d = int(M.rows());
  if (d < 1 || d > 8 || M.cols() != d)
    fail(errc::bad_request, "unit_circle_eigvals: need square matrix, dim <= 8");
  double dev = (M.adjoint() * M - CMat::Identity(d, d)).norm();
  if (!(dev <= tol_unit))
    throw Error(errc::not_unitary, "matrix is not unitary within tolerance")
        .with("deviation", dev)
        .with("tol_unit", tol_unit);

  UnitCircleSpectrum spec;
  spec.angles.reserve(d);
  auto push = [&](cplx lambda) {
    double a = std::arg(lambda);
    if (a <= -M_PI) a = M_PI;  // normalize arg(-1) to +pi
    spec.angles.push_back(a);
  };

  if (d == 1) {
    push(M(0, 0));
  } else if (d == 2) {
    // roots of lambda^2 - tr*lambda + det
    cplx tr = M(0, 0) + M(1, 1);
    cplx det = M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
    cplx disc = std::sqrt(tr * tr - 4.0 * det);
    push(0.5 * (tr + disc));
    push(0.5 * (tr - disc));
  } else {
    Eigen::ComplexEigenSolver<CMat> es(M, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
      fail(errc::not_unitary, "eigenvalue iteration failed");
    for (int i = 0; i < d; ++i) push(es.eigenvalues()[i]);
  }
  return spec;
}

}  // namespace indef
