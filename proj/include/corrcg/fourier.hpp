#pragma once

#include <Eigen/Core>

namespace corrcg::fourier {

/// y = C v for the real symmetric circulant C whose eigenvalues, in DFT index
/// order, are `spectrum`. Any length is accepted (mixed-radix FFT).
Eigen::VectorXd apply_symmetric_circulant(const Eigen::VectorXd& spectrum, const Eigen::VectorXd& v);

/// First row of the symmetric circulant with the given eigenvalues.
Eigen::VectorXd circulant_first_row(const Eigen::VectorXd& spectrum);

/// Explicit circulant matrix with the given first row.
Eigen::MatrixXd circulant_matrix(const Eigen::VectorXd& first_row);

}  // namespace corrcg::fourier
