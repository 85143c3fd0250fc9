#include "vqcpc/kmeans.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "vqcpc/common.hpp"
#include "vqcpc/errors.hpp"

namespace vqcpc {

namespace {

double sq_dist(const double* a, const double* b, int64_t dim) {
    double s = 0.0;
    for (int64_t i = 0; i < dim; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

int64_t kmeans_assign(const KMeansResult& model, const double* point) {
    int64_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int64_t c = 0; c < model.k; ++c) {
        const double d = sq_dist(point, model.centroids.data() + c * model.dim, model.dim);
        if (d < best_d) { best_d = d; best = c; }
    }
    return best;
}

KMeansResult kmeans_fit(const std::vector<double>& points, int64_t n, int64_t dim,
                        const KMeansConfig& cfg) {
    if (n < 1 || dim < 1) throw Error("kmeans_fit: empty input");
    if (cfg.k < 1) throw Error("kmeans_fit: k must be >= 1");
    const int64_t k = std::min<int64_t>(cfg.k, n);

    std::mt19937_64 rng(mix_seed(cfg.seed, 0x6b31));
    KMeansResult m;
    m.k = k;
    m.dim = dim;
    m.centroids.resize(k * dim);
    m.assignment.assign(n, 0);

    // k-means++ seeding
    std::uniform_int_distribution<int64_t> first(0, n - 1);
    const int64_t c0 = first(rng);
    std::copy_n(points.data() + c0 * dim, dim, m.centroids.data());
    std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
    for (int64_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (int64_t i = 0; i < n; ++i) {
            const double d = sq_dist(points.data() + i * dim, m.centroids.data() + (c - 1) * dim, dim);
            if (d < min_d[i]) min_d[i] = d;
            total += min_d[i];
        }
        int64_t chosen;
        if (total <= 0.0) {
            std::uniform_int_distribution<int64_t> any(0, n - 1);
            chosen = any(rng);
        } else {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng), acc = 0.0;
            chosen = n - 1;
            for (int64_t i = 0; i < n; ++i) {
                acc += min_d[i];
                if (acc >= target) { chosen = i; break; }
            }
        }
        std::copy_n(points.data() + chosen * dim, dim, m.centroids.data() + c * dim);
    }

    std::vector<double> sums(k * dim);
    std::vector<int64_t> counts(k);
    double prev_inertia = std::numeric_limits<double>::infinity();
    for (int64_t iter = 0; iter < cfg.max_iters; ++iter) {
        m.iterations = iter + 1;
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        double inertia = 0.0;
        for (int64_t i = 0; i < n; ++i) {
            const double* p = points.data() + i * dim;
            int64_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int64_t c = 0; c < k; ++c) {
                const double d = sq_dist(p, m.centroids.data() + c * dim, dim);
                if (d < best_d) { best_d = d; best = c; }
            }
            m.assignment[i] = best;
            inertia += best_d;
            ++counts[best];
            for (int64_t j = 0; j < dim; ++j) sums[best * dim + j] += p[j];
        }
        m.inertia = inertia;

        for (int64_t c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                for (int64_t j = 0; j < dim; ++j)
                    m.centroids[c * dim + j] = sums[c * dim + j] / static_cast<double>(counts[c]);
            } else {
                // Re-seed an empty cluster from the farthest point.
                int64_t far = 0;
                double far_d = -1.0;
                for (int64_t i = 0; i < n; ++i) {
                    const double d = sq_dist(points.data() + i * dim,
                                             m.centroids.data() + m.assignment[i] * dim, dim);
                    if (d > far_d) { far_d = d; far = i; }
                }
                std::copy_n(points.data() + far * dim, dim, m.centroids.data() + c * dim);
            }
        }

        if (prev_inertia < std::numeric_limits<double>::infinity()) {
            const double denom = std::max(prev_inertia, 1e-300);
            if (std::abs(prev_inertia - inertia) / denom < cfg.rel_tol) break;
        }
        prev_inertia = inertia;
    }
    return m;
}

}  // namespace vqcpc
