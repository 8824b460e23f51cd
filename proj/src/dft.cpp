#include "radarsense/dft.hpp"

#include <cmath>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace radarsense {

namespace {

/// kissfft handles arbitrary sizes but mixed-radix plans for large primes are
/// slow; everything in this project uses modest N, so no caching is needed.
Eigen::VectorXcd fft_forward(const Eigen::VectorXcd& x) {
    Eigen::FFT<double> fft;
    Eigen::VectorXcd out(x.size());
    fft.fwd(out, x);
    return out;
}

}  // namespace

Eigen::VectorXcd unitary_dft(const Eigen::VectorXcd& x) {
    if (x.size() == 0) throw std::invalid_argument("empty DFT input");
    return fft_forward(x) / std::sqrt(static_cast<double>(x.size()));
}

Eigen::VectorXcd unitary_idft(const Eigen::VectorXcd& x) {
    if (x.size() == 0) throw std::invalid_argument("empty DFT input");
    // IDFT(x) = conj(DFT(conj(x))) keeps one code path for both directions.
    return fft_forward(x.conjugate()).conjugate() / std::sqrt(static_cast<double>(x.size()));
}

Eigen::MatrixXcd dft_matrix(int n) {
    if (n < 1) throw std::invalid_argument("DFT matrix size must be >= 1");
    Eigen::MatrixXcd w(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int k = 0; k < n; ++k) {
        for (int m = 0; m < n; ++m) {
            const double cycles = std::fmod(static_cast<double>(k) * m, static_cast<double>(n));
            w(k, m) = scale * std::polar(1.0, -kTwoPi * cycles / n);
        }
    }
    return w;
}

}  // namespace radarsense
