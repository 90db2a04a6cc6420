#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "fedpmg/errors.hpp"

namespace fedpmg {

// Real-valued H x W slice, row-major. Intensities are nominally in [0,1]
// after normalization; arithmetic is done in double, files store float32.
struct Image2D {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Image2D() = default;
    Image2D(int h, int w, double fill = 0.0)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    double& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
    double at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
    size_t pixels() const { return static_cast<size_t>(height) * width; }
};

// Unshifted 2D DFT grid (DC at index (0,0)), row-major.
struct ComplexSpectrum {
    int height = 0;
    int width = 0;
    std::vector<std::complex<double>> data;

    ComplexSpectrum() = default;
    ComplexSpectrum(int h, int w)
        : height(h), width(w), data(static_cast<size_t>(h) * w, {0.0, 0.0}) {}

    std::complex<double>& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
    std::complex<double> at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return static_cast<size_t>(height) * width; }
};

// Elementwise modulus of a spectrum; entries >= 0.
struct AmplitudeSpectrum {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    AmplitudeSpectrum() = default;
    AmplitudeSpectrum(int h, int w, double fill = 0.0)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    double& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
    double at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return static_cast<size_t>(height) * width; }
};

// Elementwise argument of a spectrum; angles in (-pi, pi], zero entries get 0.
struct PhaseSpectrum {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    PhaseSpectrum() = default;
    PhaseSpectrum(int h, int w, double fill = 0.0)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    double& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
    double at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return static_cast<size_t>(height) * width; }
};

inline void require_finite(const Image2D& img, const char* what) {
    for (double v : img.data)
        if (!std::isfinite(v)) throw InvalidInput(std::string(what) + " contains non-finite values");
}

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
    if (a.height != b.height || a.width != b.width)
        throw ShapeError(std::string(what) + ": " + std::to_string(a.height) + "x" +
                         std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                         std::to_string(b.width));
}

}  // namespace fedpmg
