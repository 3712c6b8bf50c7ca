// Finite-truncation spectral analysis of subordinate-chain transition
// matrices: peripheral spectrum, simplicity of the eigenvalue 1, distance
// to -1, and detailed-balance residuals.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace seedbank {

struct SpectralReport {
  std::vector<std::complex<double>> eigenvalues;
  double modulus_max = 0.0;
  double gap_to_minus_one = 0.0;      // min |lambda + 1|
  int one_multiplicity = 0;           // # eigenvalues with |lambda - 1| < tol
  double detailed_balance_residual = -1.0;  // -1 when no pi was supplied
  bool symmetrized = false;
};

// pi, when supplied, must be a strictly positive probability vector; the
// matrix is then conjugated to D^{1/2} Q D^{-1/2} and solved with a
// self-adjoint eigensolver (real spectrum under detailed balance).
SpectralReport spectrum_report(const Eigen::MatrixXd& Q, const std::vector<double>* pi = nullptr,
                               double tol = 1e-8);

}  // namespace seedbank
