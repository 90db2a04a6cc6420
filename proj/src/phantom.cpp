#include "fedpmg/phantom.hpp"

#include <cmath>
#include <numbers>

#include "fedpmg/errors.hpp"
#include "fedpmg/rng.hpp"

namespace fedpmg {

SiteParams site_preset(const std::string& name) {
    if (name == "fastmri_3t") return {0.9, 1.8, 0.01, 1.0};
    if (name == "fastmri_15t") return {0.8, 1.4, 0.02, 1.5};
    if (name == "umr") return {1.0, 2.2, 0.015, 0.7};
    throw ConfigError("unknown site preset: " + name);
}

namespace {

struct Ellipsoid {
    double cx, cy, cz;
    double rx, ry, rz;
    double cos_t, sin_t;
    double intensity;
};

constexpr double kBiasAmplitude = 0.15;

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace

std::vector<PairedSlice> generate_subject(const PhantomSpec& spec, int subject_id) {
    if (spec.size < 16) throw InvalidInput("phantom size must be at least 16");
    if (spec.slices < 1) throw InvalidInput("phantom needs at least one slice");
    if (!(spec.site.gain > 0.0) || !(spec.site.gamma > 0.0))
        throw InvalidInput("site gain and gamma must be positive");

    Rng rng(derive_seed(spec.seed, 0x7375626aULL));  // geometry + bias field
    const int n_ell = 3 + rng.uniform_index(5);
    std::vector<Ellipsoid> ells(static_cast<std::size_t>(n_ell) + 1);
    // outer envelope spans every slice so no cross section is empty
    ells[0] = {0.5, 0.5, 0.5, 0.40, 0.44, 0.62, 1.0, 0.0, 0.3 + 0.2 * rng.uniform()};
    for (std::size_t i = 1; i < ells.size(); ++i) {
        Ellipsoid& e = ells[i];
        e.cx = 0.2 + 0.6 * rng.uniform();
        e.cy = 0.2 + 0.6 * rng.uniform();
        e.cz = rng.uniform();
        e.rx = 0.08 + 0.27 * rng.uniform();
        e.ry = 0.08 + 0.27 * rng.uniform();
        e.rz = 0.3 + 0.5 * rng.uniform();
        const double theta = std::numbers::pi * rng.uniform();
        e.cos_t = std::cos(theta);
        e.sin_t = std::sin(theta);
        e.intensity = 0.15 + 0.8 * rng.uniform();
    }
    const double phase_y = 2.0 * std::numbers::pi * rng.uniform();
    const double phase_x = 2.0 * std::numbers::pi * rng.uniform();
    const double freq = spec.site.bias_smoothness;

    std::vector<PairedSlice> out;
    out.reserve(static_cast<std::size_t>(spec.slices));
    const int s = spec.size;
    for (int j = 0; j < spec.slices; ++j) {
        PairedSlice slice;
        slice.subject_id = subject_id;
        slice.slice_index = j;
        slice.modality1 = Image2D(s, s);
        slice.modality2 = Image2D(s, s);
        Rng noise_rng(derive_seed(spec.seed, 0x6e6f6973ULL, static_cast<std::uint64_t>(j)));
        const double z = (j + 0.5) / spec.slices;

        // in-plane cross sections of each ellipsoid at depth z
        std::vector<Ellipsoid> cuts;
        cuts.reserve(ells.size());
        for (const auto& e : ells) {
            const double dz = (z - e.cz) / e.rz;
            const double sq = 1.0 - dz * dz;
            if (sq <= 0.0) continue;
            Ellipsoid c = e;
            c.rx = e.rx * std::sqrt(sq);
            c.ry = e.ry * std::sqrt(sq);
            cuts.push_back(c);
        }

        for (int y = 0; y < s; ++y) {
            const double v = (y + 0.5) / s;
            for (int x = 0; x < s; ++x) {
                const double u = (x + 0.5) / s;
                double tsum = 0.0;
                int hits = 0;
                for (const auto& c : cuts) {
                    const double du = u - c.cx;
                    const double dv = v - c.cy;
                    const double a = (du * c.cos_t + dv * c.sin_t) / c.rx;
                    const double b = (-du * c.sin_t + dv * c.cos_t) / c.ry;
                    if (a * a + b * b <= 1.0) {
                        tsum += c.intensity;
                        ++hits;
                    }
                }
                const double t = hits > 0 ? tsum / hits : 0.0;
                const double bias =
                    1.0 + kBiasAmplitude *
                              std::sin(2.0 * std::numbers::pi * freq * v + phase_y) *
                              std::sin(2.0 * std::numbers::pi * freq * u + phase_x);
                double m1 = hits > 0 ? t : 0.0;
                // same anatomy, site-specific contrast curve; stays monotone in t
                // so the cross-modal difference lives in the spectral envelope
                double m2 = hits > 0 ? spec.site.gain * std::pow(t, spec.site.gamma) * bias : 0.0;
                if (spec.site.noise_sigma > 0.0)
                    m2 += spec.site.noise_sigma * noise_rng.gaussian();
                // f32 quantization keeps memory and disk views of a dataset identical
                slice.modality1.at(y, x) = static_cast<double>(static_cast<float>(clamp01(m1)));
                slice.modality2.at(y, x) = static_cast<double>(static_cast<float>(clamp01(m2)));
            }
        }
        out.push_back(std::move(slice));
    }
    return out;
}

}  // namespace fedpmg
