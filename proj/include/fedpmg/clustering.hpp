#pragma once

#include <cstdint>
#include <vector>

#include "fedpmg/image.hpp"

namespace fedpmg {

struct CentroidSet {
    int modality = 0;
    int k = 0;
    std::vector<AmplitudeSpectrum> centroids;
    int source_client = -1;
};

struct ClusterConfig {
    int k = 50;
    int max_iter = 100;
    double tol = 1e-6;  // relative objective change
    int restarts = 3;
    std::uint64_t seed = 0;
};

// Lloyd's algorithm on flattened spectra, squared Euclidean distance,
// k-means++ seeding per restart, best restart kept. k is clamped to the
// number of inputs. Optionally records the per-iteration objective of the
// winning restart.
CentroidSet kmeans(const std::vector<AmplitudeSpectrum>& spectra, const ClusterConfig& cfg,
                   std::vector<double>* objective_trace = nullptr);

// Nearest-centroid index per spectrum; ties go to the lowest index.
std::vector<int> assign(const std::vector<AmplitudeSpectrum>& spectra,
                        const std::vector<AmplitudeSpectrum>& centroids);
std::vector<int> assign_serial(const std::vector<AmplitudeSpectrum>& spectra,
                               const std::vector<AmplitudeSpectrum>& centroids);

// Sum of squared distances from each spectrum to its nearest centroid.
double kmeans_objective(const std::vector<AmplitudeSpectrum>& spectra,
                        const std::vector<AmplitudeSpectrum>& centroids);

}  // namespace fedpmg
