#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "fedpmg/image.hpp"

namespace fedpmg {

// Unnormalized forward 2D DFT, DC at (0,0). Arbitrary sizes >= 2 per axis
// (radix-2 for powers of two, Bluestein otherwise).
ComplexSpectrum fft2(const Image2D& img);
ComplexSpectrum fft2_serial(const Image2D& img);

// 1/(H*W)-normalized inverse 2D DFT. Returns the real part; pseudo-modality
// spectra are treated as real images by construction.
Image2D ifft2(const ComplexSpectrum& spec);
Image2D ifft2_serial(const ComplexSpectrum& spec);

// Full complex inverse (normalized); used where the imaginary residue matters.
ComplexSpectrum ifft2_complex(const ComplexSpectrum& spec);

// K = A o P factorization. Phase of a zero entry is 0 by convention.
std::pair<AmplitudeSpectrum, PhaseSpectrum> decompose(const ComplexSpectrum& spec);
ComplexSpectrum recompose(const AmplitudeSpectrum& amp, const PhaseSpectrum& phase);

namespace detail {

// Precomputed single-length transform. Forward is unnormalized; inverse is
// unnormalized too (callers divide by n where needed).
class FftPlan {
  public:
    explicit FftPlan(int n);

    int length() const { return n_; }
    void forward(std::complex<double>* x) const;
    void inverse(std::complex<double>* x) const;

  private:
    void pow2_forward(std::complex<double>* x, int m, const std::vector<std::complex<double>>& tw) const;

    int n_ = 0;
    bool pow2_ = false;
    int m_ = 0;  // power-of-two work length for Bluestein
    std::vector<std::complex<double>> twiddle_;     // radix-2 stage twiddles for length m_
    std::vector<std::complex<double>> chirp_;       // e^{-i pi k^2 / n}
    std::vector<std::complex<double>> chirp_spec_;  // FFT of the Bluestein filter
};

}  // namespace detail
}  // namespace fedpmg
