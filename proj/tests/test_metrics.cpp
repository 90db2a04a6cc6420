#include <cmath>
#include <limits>

#include "doctest.h"
#include "fedpmg/metrics.hpp"
#include "fedpmg/rng.hpp"
#include "oracle_helpers.hpp"

using namespace fedpmg;

namespace {

Image2D random_image(int h, int w, std::uint64_t seed) {
    Image2D img(h, w);
    Rng rng(seed);
    for (double& v : img.data) v = rng.uniform();
    return img;
}

}  // namespace

TEST_CASE("psnr of identical images is the infinity sentinel") {
    Image2D a = random_image(8, 8, 1);
    CHECK(psnr(a, a) == std::numeric_limits<double>::infinity());
}

TEST_CASE("psnr closed form at a known mean squared error") {
    Image2D a(10, 10, 0.5);
    Image2D b(10, 10, 0.6);  // MSE = 0.01
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("psnr matches a direct recomputation on random pairs") {
    Image2D a = random_image(12, 9, 2);
    Image2D b = random_image(12, 9, 3);
    double mse = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        mse += d * d;
    }
    mse /= double(a.data.size());
    CHECK(psnr(a, b) == doctest::Approx(10.0 * std::log10(1.0 / mse)).epsilon(1e-9));
}

TEST_CASE("psnr respects a non-unit data range") {
    Image2D a(8, 8, 0.0);
    Image2D b(8, 8, 2.0);  // MSE = 4, range 2 -> 0 dB
    CHECK(psnr(a, b, 2.0) == doctest::Approx(0.0));
}

TEST_CASE("psnr rejects shape mismatches") {
    Image2D a(8, 8, 0.0);
    Image2D b(8, 9, 0.0);
    CHECK_THROWS_AS(psnr(a, b), ShapeError);
    CHECK_THROWS_AS(ssim(a, b), ShapeError);
}

TEST_CASE("ssim of an image with itself is exactly one") {
    for (std::uint64_t s : {1u, 2u, 3u}) {
        Image2D a = random_image(16, 11, s);
        CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("ssim of two constant images follows the closed form") {
    const double c = 0.3, d = 0.2;
    Image2D a(9, 9, c);
    Image2D b(9, 9, c + d);
    const double c1 = 0.01 * 0.01;
    // variances vanish, the contrast factor cancels, only luminance remains
    const double want = (2.0 * c * (c + d) + c1) / (c * c + (c + d) * (c + d) + c1);
    CHECK(ssim(a, b) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("ssim is symmetric") {
    Image2D a = random_image(14, 14, 7);
    Image2D b = random_image(14, 14, 8);
    CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
}

TEST_CASE("anti-correlated zero-mean patterns score negative") {
    Image2D a(8, 8, 0.0), b(8, 8, 0.0);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            double v = ((x + y) % 2 == 0) ? 0.25 : -0.25;
            a.at(y, x) = 0.5 + v;
            b.at(y, x) = 0.5 - v;
        }
    CHECK(ssim(a, b) < 0.0);
}

TEST_CASE("ssim needs at least one full window") {
    Image2D a(6, 9, 0.5);
    Image2D b(6, 9, 0.5);
    CHECK_THROWS_AS(ssim(a, b), InvalidInput);
}

TEST_CASE("psnr decreases monotonically with noise level") {
    Image2D ref = random_image(24, 24, 9);
    double prev = std::numeric_limits<double>::infinity();
    for (double sigma : {0.01, 0.02, 0.05, 0.1}) {
        double acc = 0.0;
        for (std::uint64_t s = 0; s < 3; ++s) {
            Image2D noisy = ref;
            Rng rng(1000 + s);
            for (double& v : noisy.data) v += sigma * rng.gaussian();
            acc += psnr(ref, noisy);
        }
        acc /= 3.0;
        CHECK(acc < prev);
        prev = acc;
    }
}

TEST_CASE("serial and threaded ssim agree bitwise") {
    Image2D a = random_image(33, 41, 10);
    Image2D b = random_image(33, 41, 11);
    CHECK(ssim(a, b) == ssim_serial(a, b));
}

TEST_CASE("ssim tracks structural degradation direction") {
    Image2D ref = random_image(20, 20, 12);
    Image2D mild = ref, heavy = ref;
    Rng rng(13);
    for (size_t i = 0; i < ref.data.size(); ++i) {
        double n = rng.gaussian();
        mild.data[i] += 0.02 * n;
        heavy.data[i] += 0.2 * n;
    }
    CHECK(ssim(ref, mild) > ssim(ref, heavy));
    CHECK(ssim(ref, mild) < 1.0);
}
