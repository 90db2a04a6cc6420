#include "fedpmg/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "fedpmg/errors.hpp"

namespace fedpmg {

double psnr(const Image2D& ref, const Image2D& test, double data_range) {
    require_same_shape(ref, test, "psnr inputs");
    require_finite(ref, "psnr reference");
    require_finite(test, "psnr test image");
    if (!(data_range > 0.0)) throw InvalidInput("psnr data range must be positive");
    double mse = 0.0;
    for (std::size_t i = 0; i < ref.data.size(); ++i) {
        double d = ref.data[i] - test.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(ref.data.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(data_range * data_range / mse);
}

namespace {

constexpr int kWin = 7;

double ssim_impl(const Image2D& ref, const Image2D& test, double data_range, bool parallel) {
    require_same_shape(ref, test, "ssim inputs");
    require_finite(ref, "ssim reference");
    require_finite(test, "ssim test image");
    if (!(data_range > 0.0)) throw InvalidInput("ssim data range must be positive");
    if (ref.height < kWin || ref.width < kWin)
        throw InvalidInput("ssim needs images of at least 7x7");

    const double c1 = (0.01 * data_range) * (0.01 * data_range);
    const double c2 = (0.03 * data_range) * (0.03 * data_range);
    const int oh = ref.height - kWin + 1;
    const int ow = ref.width - kWin + 1;
    const double inv_n = 1.0 / (kWin * kWin);

    std::vector<double> row_mean(static_cast<std::size_t>(oh));
#pragma omp parallel for if (parallel) schedule(static)
    for (int y = 0; y < oh; ++y) {
        double acc = 0.0;
        for (int x = 0; x < ow; ++x) {
            double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
            for (int dy = 0; dy < kWin; ++dy) {
                const double* a = ref.data.data() + std::size_t(y + dy) * ref.width + x;
                const double* b = test.data.data() + std::size_t(y + dy) * test.width + x;
                for (int dx = 0; dx < kWin; ++dx) {
                    double u = a[dx], v = b[dx];
                    sx += u;
                    sy += v;
                    sxx += u * u;
                    syy += v * v;
                    sxy += u * v;
                }
            }
            double mx = sx * inv_n, my = sy * inv_n;
            double vx = sxx * inv_n - mx * mx;
            double vy = syy * inv_n - my * my;
            double cov = sxy * inv_n - mx * my;
            double num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
            double den = (mx * mx + my * my + c1) * (vx + vy + c2);
            acc += num / den;
        }
        row_mean[static_cast<std::size_t>(y)] = acc / ow;
    }
    double total = 0.0;
    for (double v : row_mean) total += v;
    return total / oh;
}

}  // namespace

double ssim(const Image2D& ref, const Image2D& test, double data_range) {
    return ssim_impl(ref, test, data_range, true);
}

double ssim_serial(const Image2D& ref, const Image2D& test, double data_range) {
    return ssim_impl(ref, test, data_range, false);
}

}  // namespace fedpmg
