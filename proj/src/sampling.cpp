#include "fedpmg/sampling.hpp"

#include <cmath>

#include "fedpmg/errors.hpp"
#include "fedpmg/fft.hpp"
#include "fedpmg/rng.hpp"

namespace fedpmg {

namespace {

void check_mask_args(int width, double accel, double center_fraction) {
    if (width < 2) throw InvalidInput("mask width must be >= 2");
    if (!(accel >= 1.0) || !std::isfinite(accel)) throw InvalidInput("acceleration must be >= 1");
    if (!(center_fraction >= 0.0 && center_fraction <= 1.0))
        throw InvalidInput("center fraction must lie in [0, 1]");
}

Mask1D with_center_band(int width, double accel, double center_fraction) {
    Mask1D m;
    m.width = width;
    m.columns.assign(static_cast<std::size_t>(width), false);
    m.accel = accel;
    m.center_fraction = center_fraction;
    int c = static_cast<int>(std::floor(center_fraction * width));
    int start = (width - c) / 2;
    for (int j = start; j < start + c; ++j) m.columns[static_cast<std::size_t>(j)] = true;
    return m;
}

}  // namespace

Mask1D make_equispaced_mask(int width, double accel, double center_fraction) {
    check_mask_args(width, accel, center_fraction);
    Mask1D m = with_center_band(width, accel, center_fraction);
    int stride = static_cast<int>(std::lround(accel));
    if (stride < 1) stride = 1;
    for (int j = 0; j < width; j += stride) m.columns[static_cast<std::size_t>(j)] = true;
    return m;
}

Mask1D make_random_mask(int width, double accel, double center_fraction, std::uint64_t seed) {
    check_mask_args(width, accel, center_fraction);
    Mask1D m = with_center_band(width, accel, center_fraction);
    double c = std::floor(center_fraction * width);
    double p = (1.0 / accel - c / width) / (1.0 - c / width);
    if (p < 0.0) p = 0.0;
    if (p > 1.0) p = 1.0;
    Rng rng(derive_seed(seed, 0x6d61736bULL));  // "mask"
    for (int j = 0; j < width; ++j) {
        if (m.columns[static_cast<std::size_t>(j)]) continue;
        if (rng.uniform() < p) m.columns[static_cast<std::size_t>(j)] = true;
    }
    return m;
}

ComplexSpectrum masked_kspace(const Image2D& y, const Mask1D& mask, const NoiseSpec& noise) {
    if (mask.width != y.width) throw ShapeError("mask width does not match image width");
    ComplexSpectrum k = fft2(y);
    if (noise.sigma > 0.0) {
        Rng rng(derive_seed(noise.seed, 0x6e6f697345ULL));  // "noisE"
        for (int i = 0; i < k.height; ++i)
            for (int j = 0; j < k.width; ++j) {
                if (!mask.columns[static_cast<std::size_t>(j)]) continue;
                double re = noise.sigma * rng.gaussian();
                double im = noise.sigma * rng.gaussian();
                k.at(i, j) += std::complex<double>(re, im);
            }
    }
    for (int i = 0; i < k.height; ++i)
        for (int j = 0; j < k.width; ++j)
            if (!mask.columns[static_cast<std::size_t>(j)]) k.at(i, j) = 0.0;
    return k;
}

Image2D undersample(const Image2D& y, const Mask1D& mask, const NoiseSpec& noise) {
    ComplexSpectrum k = masked_kspace(y, mask, noise);
    return ifft2(k);
}

}  // namespace fedpmg
