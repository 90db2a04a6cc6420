#pragma once

#include <cstdint>
#include <vector>

#include "fedpmg/image.hpp"

namespace fedpmg {

struct BlendParams {
    double alpha = 0.09;
};

// Server-side store of shared amplitude centroids, flattened per modality.
struct CentroidMemory {
    std::vector<AmplitudeSpectrum> z1;
    std::vector<AmplitudeSpectrum> z2;

    const std::vector<AmplitudeSpectrum>& for_modality(int modality) const;
    std::vector<AmplitudeSpectrum>& for_modality(int modality);
};

// (1-alpha)*A + alpha*Z, elementwise.
AmplitudeSpectrum blend_amplitude(const AmplitudeSpectrum& local, const AmplitudeSpectrum& centroid,
                                  const BlendParams& p);

struct PseudoDetail {
    Image2D pseudo;       // clamped to [0,1]
    Image2D pre_clamp;    // raw inverse transform
    AmplitudeSpectrum blended;
    PhaseSpectrum phase;  // the preserved local phase
};

// Swap the image's amplitude spectrum for the blend of itself with a shared
// centroid, keep the local phase, invert, clamp to [0,1].
Image2D generate_pseudo(const Image2D& local_img, const AmplitudeSpectrum& centroid,
                        const BlendParams& p);
PseudoDetail generate_pseudo_detail(const Image2D& local_img, const AmplitudeSpectrum& centroid,
                                    const BlendParams& p);

// Uniform draw from the memory's list for one modality; one draw per seed.
const AmplitudeSpectrum& sample_centroid(const CentroidMemory& memory, int modality,
                                         std::uint64_t rng_seed);

}  // namespace fedpmg
