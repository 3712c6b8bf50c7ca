#include "seedbank/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace seedbank {

SpectralReport spectrum_report(const Eigen::MatrixXd& Q, const std::vector<double>* pi,
                               double tol) {
  long long n = Q.rows();
  if (n == 0 || Q.cols() != n) throw std::invalid_argument("spectrum_report: square matrix required");
  if (n > 4096) throw std::invalid_argument("spectrum_report: dimension limit 4096 exceeded");
  for (long long i = 0; i < n; ++i) {
    double row = 0.0;
    for (long long j = 0; j < n; ++j) {
      if (Q(i, j) < -1e-12) throw std::invalid_argument("spectrum_report: negative entry");
      row += Q(i, j);
    }
    if (std::abs(row - 1.0) > 1e-12)
      throw std::invalid_argument("spectrum_report: matrix is not row-stochastic");
  }

  SpectralReport rep;
  if (pi) {
    if (static_cast<long long>(pi->size()) != n)
      throw std::invalid_argument("spectrum_report: pi size mismatch");
    double res = 0.0;
    for (long long i = 0; i < n; ++i)
      for (long long j = 0; j < n; ++j)
        res = std::max(res, std::abs((*pi)[i] * Q(i, j) - (*pi)[j] * Q(j, i)));
    rep.detailed_balance_residual = res;

    Eigen::VectorXd sqrt_pi(n);
    for (long long i = 0; i < n; ++i) {
      if ((*pi)[i] <= 0.0) throw std::invalid_argument("spectrum_report: pi must be positive");
      sqrt_pi(i) = std::sqrt((*pi)[i]);
    }
    Eigen::MatrixXd S(n, n);
    for (long long i = 0; i < n; ++i)
      for (long long j = 0; j < n; ++j) S(i, j) = sqrt_pi(i) * Q(i, j) / sqrt_pi(j);
    // symmetrize residual rounding before the self-adjoint solve
    S = 0.5 * (S + S.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("spectrum_report: eigensolver failed");
    for (long long i = 0; i < n; ++i) rep.eigenvalues.emplace_back(solver.eigenvalues()(i), 0.0);
    rep.symmetrized = true;
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(Q, false);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("spectrum_report: eigensolver failed");
    for (long long i = 0; i < n; ++i) rep.eigenvalues.push_back(solver.eigenvalues()(i));
  }

  rep.gap_to_minus_one = std::numeric_limits<double>::infinity();
  for (const auto& ev : rep.eigenvalues) {
    rep.modulus_max = std::max(rep.modulus_max, std::abs(ev));
    rep.gap_to_minus_one = std::min(rep.gap_to_minus_one, std::abs(ev + 1.0));
    if (std::abs(ev - 1.0) < tol) ++rep.one_multiplicity;
  }
  return rep;
}

}  // namespace seedbank
