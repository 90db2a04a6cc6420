#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "fedpmg/clustering.hpp"
#include "fedpmg/fft.hpp"
#include "fedpmg/metrics.hpp"
#include "fedpmg/model.hpp"
#include "fedpmg/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace fedpmg;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm-up
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

Image2D random_image(int h, int w, Rng& rng) {
    Image2D img(h, w);
    for (double& v : img.data) v = rng.uniform();
    return img;
}

void report(const char* name, double serial_ms, double parallel_ms) {
    std::printf("%-28s %10.3f ms %10.3f ms %8.2fx\n", name, serial_ms, parallel_ms,
                serial_ms / parallel_ms);
}

}  // namespace

int main() {
    Rng rng(20240901);
#ifdef _OPENMP
    std::printf("threads available: %d\n", omp_get_max_threads());
#else
    std::printf("threads available: 1 (no OpenMP)\n");
#endif
    std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

    {
        const Image2D img = random_image(320, 320, rng);
        const double s = time_ms([&] { fft2_serial(img); }, 5);
        const double p = time_ms([&] { fft2(img); }, 5);
        report("fft2 320x320", s, p);
    }
    {
        const int n = 8, h = 64, w = 64;
        ModelParams params = init_params(2, 7);
        Batch batch;
        batch.n = n;
        batch.in_ch = 2;
        batch.height = h;
        batch.width = w;
        batch.inputs.resize(static_cast<std::size_t>(n) * 2 * h * w);
        batch.targets.resize(static_cast<std::size_t>(n) * h * w);
        for (double& v : batch.inputs) v = rng.uniform();
        for (double& v : batch.targets) v = rng.uniform();
        const double s = time_ms([&] { forward_serial(params, batch); }, 5);
        const double p = time_ms([&] { forward(params, batch); }, 5);
        report("conv forward 8x2x64x64", s, p);

        ForwardTrace trace;
        forward_with_trace(params, batch, trace);
        const LossGrad lg = l1_loss(trace.pred, batch.targets);
        const double bs = time_ms([&] { backward_serial(params, batch, trace, lg.grad_pred); }, 5);
        const double bp = time_ms([&] { backward(params, batch, trace, lg.grad_pred); }, 5);
        report("conv backward 8x2x64x64", bs, bp);
    }
    {
        std::vector<AmplitudeSpectrum> spectra;
        for (int i = 0; i < 500; ++i) {
            AmplitudeSpectrum a(32, 32);
            for (double& v : a.data) v = rng.uniform();
            spectra.push_back(std::move(a));
        }
        std::vector<AmplitudeSpectrum> cents(spectra.begin(), spectra.begin() + 50);
        const double s = time_ms([&] { assign_serial(spectra, cents); }, 10);
        const double p = time_ms([&] { assign(spectra, cents); }, 10);
        report("kmeans assign 500x50", s, p);
    }
    {
        const Image2D a = random_image(320, 320, rng);
        const Image2D b = random_image(320, 320, rng);
        const double s = time_ms([&] { ssim_serial(a, b); }, 5);
        const double p = time_ms([&] { ssim(a, b); }, 5);
        report("ssim 320x320", s, p);
    }
    return 0;
}
