#include "fedpmg/fft.hpp"

#include <cassert>
#include <cmath>

namespace fedpmg {
namespace detail {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

int next_pow2(int n) {
    int m = 1;
    while (m < n) m <<= 1;
    return m;
}

}  // namespace

FftPlan::FftPlan(int n) : n_(n), pow2_(is_pow2(n)) {
    assert(n >= 1);
    m_ = pow2_ ? n : next_pow2(2 * n - 1);
    // Stage twiddles for an iterative radix-2 transform of length m_:
    // for each stage size s, the s/2 roots e^{-2 pi i k / s}, packed end to end.
    twiddle_.reserve(m_ > 1 ? m_ - 1 : 0);
    for (int s = 2; s <= m_; s <<= 1) {
        for (int k = 0; k < s / 2; ++k) {
            const double a = -2.0 * kPi * k / s;
            twiddle_.emplace_back(std::cos(a), std::sin(a));
        }
    }
    if (!pow2_) {
        // Bluestein: chirp c_k = e^{-i pi k^2 / n}; the convolution filter is
        // conj(c) embedded circularly at indices 0..n-1 and m-1 down to m-n+1.
        chirp_.resize(n_);
        for (int k = 0; k < n_; ++k) {
            // k^2 mod 2n keeps the angle argument small and exact
            const long long k2 = (static_cast<long long>(k) * k) % (2LL * n_);
            const double a = -kPi * static_cast<double>(k2) / n_;
            chirp_[k] = {std::cos(a), std::sin(a)};
        }
        chirp_spec_.assign(m_, {0.0, 0.0});
        for (int k = 0; k < n_; ++k) {
            const std::complex<double> b = std::conj(chirp_[k]);
            chirp_spec_[k] = b;
            if (k > 0) chirp_spec_[m_ - k] = b;
        }
        pow2_forward(chirp_spec_.data(), m_, twiddle_);
    }
}

void FftPlan::pow2_forward(std::complex<double>* x, int m,
                           const std::vector<std::complex<double>>& tw) const {
    // bit-reversal permutation
    for (int i = 1, j = 0; i < m; ++i) {
        int bit = m >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    // butterflies
    size_t tw_off = 0;
    for (int s = 2; s <= m; s <<= 1) {
        const int half = s / 2;
        for (int start = 0; start < m; start += s) {
            for (int k = 0; k < half; ++k) {
                const std::complex<double> w = tw[tw_off + k];
                std::complex<double>& a = x[start + k];
                std::complex<double>& b = x[start + k + half];
                const std::complex<double> t = w * b;
                b = a - t;
                a += t;
            }
        }
        tw_off += half;
    }
}

void FftPlan::forward(std::complex<double>* x) const {
    if (n_ == 1) return;
    if (pow2_) {
        pow2_forward(x, n_, twiddle_);
        return;
    }
    // Bluestein via circular convolution at length m_
    std::vector<std::complex<double>> a(m_, {0.0, 0.0});
    for (int k = 0; k < n_; ++k) a[k] = x[k] * chirp_[k];
    pow2_forward(a.data(), m_, twiddle_);
    for (int k = 0; k < m_; ++k) a[k] *= chirp_spec_[k];
    // inverse pow2 FFT by conjugation
    for (auto& v : a) v = std::conj(v);
    pow2_forward(a.data(), m_, twiddle_);
    const double inv_m = 1.0 / m_;
    for (int k = 0; k < n_; ++k) x[k] = std::conj(a[k]) * inv_m * chirp_[k];
}

void FftPlan::inverse(std::complex<double>* x) const {
    // unnormalized inverse = conj(forward(conj(x)))
    for (int k = 0; k < n_; ++k) x[k] = std::conj(x[k]);
    forward(x);
    for (int k = 0; k < n_; ++k) x[k] = std::conj(x[k]);
}

namespace {

enum class Dir { Forward, Inverse };

void transform_rows(ComplexSpectrum& s, const FftPlan& plan, Dir dir, bool parallel) {
    const int h = s.height, w = s.width;
#pragma omp parallel for if (parallel) schedule(static)
    for (int y = 0; y < h; ++y) {
        std::complex<double>* row = s.data.data() + static_cast<size_t>(y) * w;
        if (dir == Dir::Forward)
            plan.forward(row);
        else
            plan.inverse(row);
    }
}

void transform_cols(ComplexSpectrum& s, const FftPlan& plan, Dir dir, bool parallel) {
    const int h = s.height, w = s.width;
#pragma omp parallel for if (parallel) schedule(static)
    for (int x = 0; x < w; ++x) {
        std::vector<std::complex<double>> col(h);
        for (int y = 0; y < h; ++y) col[y] = s.at(y, x);
        if (dir == Dir::Forward)
            plan.forward(col.data());
        else
            plan.inverse(col.data());
        for (int y = 0; y < h; ++y) s.at(y, x) = col[y];
    }
}

ComplexSpectrum fft2_impl(const Image2D& img, bool parallel) {
    if (img.height < 2 || img.width < 2) throw InvalidInput("fft2 requires height, width >= 2");
    require_finite(img, "fft2 input");
    ComplexSpectrum s(img.height, img.width);
    for (size_t i = 0; i < img.pixels(); ++i) s.data[i] = {img.data[i], 0.0};
    FftPlan row_plan(img.width);
    transform_rows(s, row_plan, Dir::Forward, parallel);
    FftPlan col_plan(img.height);
    transform_cols(s, col_plan, Dir::Forward, parallel);
    return s;
}

ComplexSpectrum ifft2_complex_impl(const ComplexSpectrum& spec, bool parallel) {
    if (spec.height < 1 || spec.width < 1) throw InvalidInput("ifft2: empty spectrum");
    for (const auto& v : spec.data)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw InvalidInput("ifft2 input contains non-finite values");
    ComplexSpectrum s = spec;
    FftPlan row_plan(spec.width);
    transform_rows(s, row_plan, Dir::Inverse, parallel);
    FftPlan col_plan(spec.height);
    transform_cols(s, col_plan, Dir::Inverse, parallel);
    const double norm = 1.0 / (static_cast<double>(spec.height) * spec.width);
    for (auto& v : s.data) v *= norm;
    return s;
}

Image2D ifft2_impl(const ComplexSpectrum& spec, bool parallel) {
    ComplexSpectrum s = ifft2_complex_impl(spec, parallel);
    Image2D img(spec.height, spec.width);
    for (size_t i = 0; i < s.size(); ++i) img.data[i] = s.data[i].real();
    return img;
}

}  // namespace
}  // namespace detail

ComplexSpectrum fft2(const Image2D& img) { return detail::fft2_impl(img, true); }
ComplexSpectrum fft2_serial(const Image2D& img) { return detail::fft2_impl(img, false); }

Image2D ifft2(const ComplexSpectrum& spec) { return detail::ifft2_impl(spec, true); }
Image2D ifft2_serial(const ComplexSpectrum& spec) { return detail::ifft2_impl(spec, false); }

ComplexSpectrum ifft2_complex(const ComplexSpectrum& spec) {
    return detail::ifft2_complex_impl(spec, true);
}

std::pair<AmplitudeSpectrum, PhaseSpectrum> decompose(const ComplexSpectrum& spec) {
    AmplitudeSpectrum amp(spec.height, spec.width);
    PhaseSpectrum phase(spec.height, spec.width);
    for (size_t i = 0; i < spec.size(); ++i) {
        const std::complex<double> v = spec.data[i];
        const double a = std::abs(v);
        amp.data[i] = a;
        phase.data[i] = (a == 0.0) ? 0.0 : std::atan2(v.imag(), v.real());
    }
    return {std::move(amp), std::move(phase)};
}

ComplexSpectrum recompose(const AmplitudeSpectrum& amp, const PhaseSpectrum& phase) {
    require_same_shape(amp, phase, "recompose");
    ComplexSpectrum spec(amp.height, amp.width);
    for (size_t i = 0; i < spec.size(); ++i) {
        const double a = amp.data[i];
        const double p = phase.data[i];
        spec.data[i] = {a * std::cos(p), a * std::sin(p)};
    }
    return spec;
}

}  // namespace fedpmg
