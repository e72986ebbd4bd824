#include "corrcg/fourier.hpp"

#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "corrcg/errors.hpp"

namespace corrcg::fourier {
namespace {

// Eigen's FFT caches twiddle plans in the object; one per thread keeps callers
// free of shared mutable state.
Eigen::FFT<double>& engine() {
  thread_local Eigen::FFT<double> fft;
  return fft;
}

}  // namespace

Eigen::VectorXd apply_symmetric_circulant(const Eigen::VectorXd& spectrum, const Eigen::VectorXd& v) {
  if (spectrum.size() != v.size()) throw DomainError("circulant apply: dimension mismatch");
  auto& fft = engine();
  std::vector<double> in(v.data(), v.data() + v.size());
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, in);
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) freq[static_cast<std::size_t>(i)] *= spectrum[i];
  std::vector<double> out;
  fft.inv(out, freq);
  return Eigen::Map<const Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

Eigen::VectorXd circulant_first_row(const Eigen::VectorXd& spectrum) {
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(spectrum.size());
  e0[0] = 1.0;
  // For a symmetric circulant the first column equals the first row.
  return apply_symmetric_circulant(spectrum, e0);
}

Eigen::MatrixXd circulant_matrix(const Eigen::VectorXd& first_row) {
  const Eigen::Index n = first_row.size();
  Eigen::MatrixXd C(n, n);
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index q = 0; q < n; ++q) C(p, q) = first_row[(q - p + n) % n];
  return C;
}

}  // namespace corrcg::fourier
