#pragma once

#include "fedpmg/image.hpp"

namespace fedpmg {

// 10*log10(range^2 / MSE); +inf when the images match exactly.
double psnr(const Image2D& ref, const Image2D& test, double data_range = 1.0);

// Mean SSIM over all fully interior 7x7 windows (uniform weights, population
// moments, C1=(0.01*range)^2, C2=(0.03*range)^2). Images must be at least 7x7.
double ssim(const Image2D& ref, const Image2D& test, double data_range = 1.0);
double ssim_serial(const Image2D& ref, const Image2D& test, double data_range = 1.0);

}  // namespace fedpmg
