#include "fedpmg/clustering.hpp"

#include <cmath>
#include <cstddef>
#include <limits>

#include "fedpmg/errors.hpp"
#include "fedpmg/rng.hpp"

namespace fedpmg {

namespace {

// Four fixed-order accumulator chains: deterministic yet SIMD-friendly.
double sq_dist(const double* a, const double* b, std::size_t d) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= d; i += 4) {
        const double t0 = a[i] - b[i];
        const double t1 = a[i + 1] - b[i + 1];
        const double t2 = a[i + 2] - b[i + 2];
        const double t3 = a[i + 3] - b[i + 3];
        s0 += t0 * t0;
        s1 += t1 * t1;
        s2 += t2 * t2;
        s3 += t3 * t3;
    }
    for (; i < d; ++i) {
        const double t = a[i] - b[i];
        s0 += t * t;
    }
    return (s0 + s1) + (s2 + s3);
}

void nearest_all(const std::vector<const double*>& pts, const std::vector<double>& cents,
                 std::size_t d, int k, std::vector<int>& idx, std::vector<double>& dist,
                 bool parallel) {
    const int n = static_cast<int>(pts.size());
#pragma omp parallel for if (parallel) schedule(static)
    for (int i = 0; i < n; ++i) {
        int best = 0;
        double best_d = sq_dist(pts[static_cast<std::size_t>(i)], cents.data(), d);
        for (int c = 1; c < k; ++c) {
            double dd = sq_dist(pts[static_cast<std::size_t>(i)],
                                cents.data() + static_cast<std::size_t>(c) * d, d);
            if (dd < best_d) {
                best_d = dd;
                best = c;
            }
        }
        idx[static_cast<std::size_t>(i)] = best;
        dist[static_cast<std::size_t>(i)] = best_d;
    }
}

struct LloydResult {
    std::vector<double> centroids;  // k*d flattened
    double objective = 0.0;
    std::vector<double> trace;
};

LloydResult run_lloyd(const std::vector<const double*>& pts, std::size_t d, int k,
                      const ClusterConfig& cfg, Rng& rng) {
    const int n = static_cast<int>(pts.size());
    std::vector<double> cents(static_cast<std::size_t>(k) * d, 0.0);

    // k-means++ seeding
    std::vector<double> min_d(static_cast<std::size_t>(n),
                              std::numeric_limits<double>::infinity());
    int first = rng.uniform_index(n);
    std::copy(pts[static_cast<std::size_t>(first)], pts[static_cast<std::size_t>(first)] + d,
              cents.begin());
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        const double* prev = cents.data() + static_cast<std::size_t>(c - 1) * d;
        for (int i = 0; i < n; ++i) {
            double dd = sq_dist(pts[static_cast<std::size_t>(i)], prev, d);
            if (dd < min_d[static_cast<std::size_t>(i)]) min_d[static_cast<std::size_t>(i)] = dd;
            total += min_d[static_cast<std::size_t>(i)];
        }
        int chosen = 0;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            double acc = 0.0;
            chosen = n - 1;
            for (int i = 0; i < n; ++i) {
                acc += min_d[static_cast<std::size_t>(i)];
                if (target < acc) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = rng.uniform_index(n);
        }
        std::copy(pts[static_cast<std::size_t>(chosen)],
                  pts[static_cast<std::size_t>(chosen)] + d,
                  cents.begin() + static_cast<std::size_t>(c) * d);
    }

    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    std::vector<double> dist(static_cast<std::size_t>(n), 0.0);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    LloydResult out;
    double prev_obj = std::numeric_limits<double>::infinity();

    for (int it = 0; it < cfg.max_iter; ++it) {
        nearest_all(pts, cents, d, k, idx, dist, true);
        double obj = 0.0;
        for (int i = 0; i < n; ++i) obj += dist[static_cast<std::size_t>(i)];

        // repair empty clusters with the point farthest from its centroid
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            int far = -1;
            double far_d = -1.0;
            for (int i = 0; i < n; ++i) {
                if (counts[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] <= 1) continue;
                if (dist[static_cast<std::size_t>(i)] > far_d) {
                    far_d = dist[static_cast<std::size_t>(i)];
                    far = i;
                }
            }
            if (far < 0) continue;  // fewer distinct points than clusters
            --counts[static_cast<std::size_t>(idx[static_cast<std::size_t>(far)])];
            idx[static_cast<std::size_t>(far)] = c;
            counts[static_cast<std::size_t>(c)] = 1;
            dist[static_cast<std::size_t>(far)] = 0.0;
        }

        std::fill(cents.begin(), cents.end(), 0.0);
        for (int i = 0; i < n; ++i) {
            double* dst = cents.data() + static_cast<std::size_t>(idx[static_cast<std::size_t>(i)]) * d;
            const double* src = pts[static_cast<std::size_t>(i)];
            for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] == 0) continue;
            double inv = 1.0 / counts[static_cast<std::size_t>(c)];
            double* dst = cents.data() + static_cast<std::size_t>(c) * d;
            for (std::size_t j = 0; j < d; ++j) dst[j] *= inv;
        }

        out.trace.push_back(obj);
        if (std::isfinite(prev_obj) &&
            (obj >= prev_obj || (prev_obj - obj) <= cfg.tol * prev_obj))
            break;
        prev_obj = obj;
    }

    nearest_all(pts, cents, d, k, idx, dist, true);
    double final_obj = 0.0;
    for (int i = 0; i < n; ++i) final_obj += dist[static_cast<std::size_t>(i)];
    out.centroids = std::move(cents);
    out.objective = final_obj;
    return out;
}

}  // namespace

CentroidSet kmeans(const std::vector<AmplitudeSpectrum>& spectra, const ClusterConfig& cfg,
                   std::vector<double>* objective_trace) {
    if (spectra.empty()) throw InvalidInput("kmeans needs at least one spectrum");
    if (cfg.k < 1) throw InvalidInput("cluster count must be positive");
    if (cfg.max_iter < 1) throw InvalidInput("cluster max_iter must be positive");
    if (cfg.restarts < 1) throw InvalidInput("cluster restarts must be positive");
    if (!(cfg.tol >= 0.0)) throw InvalidInput("cluster tol must be non-negative");
    const int h = spectra[0].height, w = spectra[0].width;
    for (const auto& s : spectra) {
        if (s.height != h || s.width != w)
            throw ShapeError("kmeans spectra must share one shape");
    }
    const std::size_t d = spectra[0].size();
    const int n = static_cast<int>(spectra.size());

    CentroidSet out;
    out.k = std::min(cfg.k, n);

    if (cfg.k >= n) {  // every point is its own centroid
        out.centroids = spectra;
        if (objective_trace) objective_trace->assign(1, 0.0);
        return out;
    }

    std::vector<const double*> pts(spectra.size());
    for (std::size_t i = 0; i < spectra.size(); ++i) pts[i] = spectra[i].data.data();

    LloydResult best;
    best.objective = std::numeric_limits<double>::infinity();
    for (int r = 0; r < cfg.restarts; ++r) {
        Rng rng(derive_seed(cfg.seed, 0x6b6d6575ULL, static_cast<std::uint64_t>(r)));
        LloydResult res = run_lloyd(pts, d, out.k, cfg, rng);
        if (res.objective < best.objective) best = std::move(res);
    }

    out.centroids.reserve(static_cast<std::size_t>(out.k));
    for (int c = 0; c < out.k; ++c) {
        AmplitudeSpectrum cent(h, w);
        std::copy(best.centroids.begin() + static_cast<std::size_t>(c) * d,
                  best.centroids.begin() + static_cast<std::size_t>(c + 1) * d,
                  cent.data.begin());
        for (double v : cent.data)
            if (!std::isfinite(v)) throw InvalidInput("kmeans produced a non-finite centroid");
        out.centroids.push_back(std::move(cent));
    }
    if (objective_trace) *objective_trace = std::move(best.trace);
    return out;
}

namespace {

std::vector<int> assign_impl(const std::vector<AmplitudeSpectrum>& spectra,
                             const std::vector<AmplitudeSpectrum>& centroids, bool parallel) {
    if (centroids.empty()) throw InvalidInput("assign needs at least one centroid");
    const std::size_t d = centroids[0].size();
    for (const auto& s : spectra)
        if (s.size() != d || s.height != centroids[0].height)
            throw ShapeError("assign spectra/centroid shapes differ");
    for (const auto& c : centroids)
        if (c.size() != d || c.height != centroids[0].height)
            throw ShapeError("assign centroids must share one shape");

    std::vector<int> idx(spectra.size(), 0);
    const int n = static_cast<int>(spectra.size());
    const int k = static_cast<int>(centroids.size());
#pragma omp parallel for if (parallel) schedule(static)
    for (int i = 0; i < n; ++i) {
        int best = 0;
        double best_d = sq_dist(spectra[static_cast<std::size_t>(i)].data.data(),
                                centroids[0].data.data(), d);
        for (int c = 1; c < k; ++c) {
            double dd = sq_dist(spectra[static_cast<std::size_t>(i)].data.data(),
                                centroids[static_cast<std::size_t>(c)].data.data(), d);
            if (dd < best_d) {
                best_d = dd;
                best = c;
            }
        }
        idx[static_cast<std::size_t>(i)] = best;
    }
    return idx;
}

}  // namespace

std::vector<int> assign(const std::vector<AmplitudeSpectrum>& spectra,
                        const std::vector<AmplitudeSpectrum>& centroids) {
    return assign_impl(spectra, centroids, true);
}

std::vector<int> assign_serial(const std::vector<AmplitudeSpectrum>& spectra,
                               const std::vector<AmplitudeSpectrum>& centroids) {
    return assign_impl(spectra, centroids, false);
}

double kmeans_objective(const std::vector<AmplitudeSpectrum>& spectra,
                        const std::vector<AmplitudeSpectrum>& centroids) {
    std::vector<int> idx = assign_serial(spectra, centroids);
    double obj = 0.0;
    for (std::size_t i = 0; i < spectra.size(); ++i)
        obj += sq_dist(spectra[i].data.data(),
                       centroids[static_cast<std::size_t>(idx[i])].data.data(),
                       spectra[i].size());
    return obj;
}

}  // namespace fedpmg
