#pragma once
#include <cstdint>
#include <vector>

namespace vqcpc {

// Lloyd's algorithm with k-means++ seeding. Points are row-major n x dim.
// Ties on nearest centroid resolve to the lowest index; clusters that empty
// out are re-seeded from the point farthest from its centroid.
struct KMeansResult {
    std::vector<double> centroids;  // k x dim, row-major
    std::vector<int64_t> assignment;
    int64_t k = 0;
    int64_t dim = 0;
    double inertia = 0.0;
    int64_t iterations = 0;
};

struct KMeansConfig {
    int64_t k = 512;
    int64_t max_iters = 100;
    double rel_tol = 1e-6;  // stop when relative inertia change drops below
    uint64_t seed = 0;
};

KMeansResult kmeans_fit(const std::vector<double>& points, int64_t n, int64_t dim,
                        const KMeansConfig& cfg);

// Index of the nearest centroid (lowest index on ties).
int64_t kmeans_assign(const KMeansResult& model, const double* point);

}  // namespace vqcpc
