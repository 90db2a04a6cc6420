#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedpmg/image.hpp"

namespace fedpmg {

// Site-specific contrast/noise knobs emulating scanner differences.
struct SiteParams {
    double gain = 0.9;
    double gamma = 1.8;
    double noise_sigma = 0.01;
    double bias_smoothness = 1.0;  // cycles of the bias field across the image
};

// Presets: "fastmri_3t", "fastmri_15t", "umr".
SiteParams site_preset(const std::string& name);

struct PhantomSpec {
    int size = 32;    // H = W
    int slices = 16;  // per subject
    std::uint64_t seed = 0;
    SiteParams site;
};

struct PairedSlice {
    Image2D modality1;
    Image2D modality2;
    int subject_id = 0;
    int slice_index = 0;
};

// A subject is a stack of slices cut through a fixed envelope ellipsoid (so
// no slice is empty) plus 3-7 random internal ellipsoids. Both modalities
// share the geometry; modality 2 applies the site's monotone contrast curve
// (gain*t^gamma), picks up a smooth multiplicative bias field, and adds
// Gaussian pixel noise. Everything lands in [0,1], quantized to f32 so disk
// round-trips are exact.
std::vector<PairedSlice> generate_subject(const PhantomSpec& spec, int subject_id = 0);

}  // namespace fedpmg
