#pragma once

#include <cstdint>
#include <vector>

#include "fedpmg/image.hpp"

namespace fedpmg {

// 1D Cartesian column mask, applied to the unshifted DFT grid.
struct Mask1D {
    int width = 0;
    std::vector<bool> columns;  // true = sampled
    double accel = 1.0;
    double center_fraction = 0.0;

    int sampled_count() const {
        int c = 0;
        for (bool b : columns) c += b ? 1 : 0;
        return c;
    }
};

// Complex Gaussian measurement noise on sampled k-space entries.
struct NoiseSpec {
    double sigma = 0.0;  // std-dev per real/imag component
    std::uint64_t seed = 0;
};

// Central band of floor(center_fraction*width) columns plus a stride-round(accel)
// comb anchored at column 0.
Mask1D make_equispaced_mask(int width, double accel, double center_fraction);

// Central band plus outer columns kept i.i.d. with probability chosen so the
// expected sampled fraction is 1/accel.
Mask1D make_random_mask(int width, double accel, double center_fraction, std::uint64_t seed);

// x = ifft2(M o (fft2(y) + eps)); noise is added to sampled entries only.
Image2D undersample(const Image2D& y, const Mask1D& mask, const NoiseSpec& noise);

// Masked k-space of y (noise included); the first stage of undersample.
ComplexSpectrum masked_kspace(const Image2D& y, const Mask1D& mask, const NoiseSpec& noise);

}  // namespace fedpmg
