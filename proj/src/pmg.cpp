#include "fedpmg/pmg.hpp"

#include "fedpmg/errors.hpp"
#include "fedpmg/fft.hpp"
#include "fedpmg/rng.hpp"

namespace fedpmg {

const std::vector<AmplitudeSpectrum>& CentroidMemory::for_modality(int modality) const {
    if (modality == 1) return z1;
    if (modality == 2) return z2;
    throw InvalidInput("modality tag must be 1 or 2");
}

std::vector<AmplitudeSpectrum>& CentroidMemory::for_modality(int modality) {
    if (modality == 1) return z1;
    if (modality == 2) return z2;
    throw InvalidInput("modality tag must be 1 or 2");
}

AmplitudeSpectrum blend_amplitude(const AmplitudeSpectrum& local, const AmplitudeSpectrum& centroid,
                                  const BlendParams& p) {
    if (!(p.alpha >= 0.0 && p.alpha <= 1.0)) throw InvalidInput("blend alpha must lie in [0, 1]");
    require_same_shape(local, centroid, "blend inputs");
    AmplitudeSpectrum out(local.height, local.width);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = (1.0 - p.alpha) * local.data[i] + p.alpha * centroid.data[i];
    return out;
}

PseudoDetail generate_pseudo_detail(const Image2D& local_img, const AmplitudeSpectrum& centroid,
                                    const BlendParams& p) {
    ComplexSpectrum k = fft2(local_img);
    auto [amp, phase] = decompose(k);
    require_same_shape(amp, centroid, "centroid vs image spectrum");
    PseudoDetail d;
    d.blended = blend_amplitude(amp, centroid, p);
    d.phase = std::move(phase);
    d.pre_clamp = ifft2(recompose(d.blended, d.phase));
    d.pseudo = d.pre_clamp;
    for (double& v : d.pseudo.data) v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    return d;
}

Image2D generate_pseudo(const Image2D& local_img, const AmplitudeSpectrum& centroid,
                        const BlendParams& p) {
    return generate_pseudo_detail(local_img, centroid, p).pseudo;
}

const AmplitudeSpectrum& sample_centroid(const CentroidMemory& memory, int modality,
                                         std::uint64_t rng_seed) {
    const auto& list = memory.for_modality(modality);
    if (list.empty()) throw MissingModalityError("no centroids stored for the requested modality");
    Rng rng(derive_seed(rng_seed, 0x63656e74ULL, static_cast<std::uint64_t>(modality)));
    return list[static_cast<std::size_t>(rng.uniform_index(static_cast<int>(list.size())))];
}

}  // namespace fedpmg
