#include "rydpair/eigen_solver.hpp"

#include "rydpair/errors.hpp"

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <string>

namespace rydpair {

namespace {

void check(lapack_int info, const char *routine) {
  if (info != 0) throw NumericalError(std::string(routine) + " failed with info " + std::to_string(info));
}

} // namespace

EigenSystem eigh(const Eigen::MatrixXd &h) {
  EigenSystem out;
  const lapack_int n = static_cast<lapack_int>(h.rows());
  out.vectors = h;
  out.values.resize(n);
  if (n == 0) return out;
  check(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, out.vectors.data(), n, out.values.data()), "dsyevd");
  return out;
}

ComplexEigenSystem eigh(const Eigen::MatrixXcd &h) {
  ComplexEigenSystem out;
  const lapack_int n = static_cast<lapack_int>(h.rows());
  out.vectors = h;
  out.values.resize(n);
  if (n == 0) return out;
  check(LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n, out.vectors.data(),
                       n, out.values.data()),
        "zheevd");
  return out;
}

Eigen::VectorXd eigvalsh(const Eigen::MatrixXd &h) {
  const lapack_int n = static_cast<lapack_int>(h.rows());
  Eigen::MatrixXd a = h;
  Eigen::VectorXd w(n);
  if (n == 0) return w;
  check(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, a.data(), n, w.data()), "dsyevd");
  return w;
}

Eigen::VectorXd eigvalsh(const Eigen::MatrixXcd &h) {
  const lapack_int n = static_cast<lapack_int>(h.rows());
  Eigen::MatrixXcd a = h;
  Eigen::VectorXd w(n);
  if (n == 0) return w;
  check(LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', n, a.data(), n,
                       w.data()),
        "zheevd");
  return w;
}

bool is_real(const Eigen::MatrixXcd &h, double tol) {
  return h.size() == 0 || h.imag().cwiseAbs().maxCoeff() <= tol;
}

} // namespace rydpair
