#ifndef RADARSENSE_DFT_HPP
#define RADARSENSE_DFT_HPP

#include "radarsense/types.hpp"

namespace radarsense {

/// Unitary forward DFT: X_k = (1/sqrt(N)) sum_n x_n exp(-j 2 pi k n / N).
Eigen::VectorXcd unitary_dft(const Eigen::VectorXcd& x);

/// Unitary inverse DFT, the adjoint of unitary_dft.
Eigen::VectorXcd unitary_idft(const Eigen::VectorXcd& x);

/// Dense unitary DFT matrix W with W_{k,n} = exp(-j 2 pi k n / N) / sqrt(N).
/// Intended for small-N oracle checks; the transform functions above do not
/// materialize it.
Eigen::MatrixXcd dft_matrix(int n);

}  // namespace radarsense

#endif  // RADARSENSE_DFT_HPP
