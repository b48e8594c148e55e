#include "topkgmm/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "topkgmm/parallel.hpp"
#include "topkgmm/random.hpp"

namespace topk {

DistanceMatrix pairwise_distances(std::span<const TopKList> records, double p) {
  DistanceMatrix d;
  d.n = records.size();
  d.values.assign(d.n * d.n, 0.0f);
  parallel_for(d.n, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < d.n; ++j)
      d.values[i * d.n + j] = static_cast<float>(kendall_p_distance(records[i], records[j], p));
  });
  for (std::size_t i = 0; i < d.n; ++i)
    for (std::size_t j = 0; j < i; ++j) d.values[i * d.n + j] = d.values[j * d.n + i];
  return d;
}

double silhouette(const DistanceMatrix& d, const std::vector<std::size_t>& assignment, std::size_t c) {
  const std::size_t n = d.n;
  if (n == 0) return 0.0;
  std::vector<std::size_t> sizes(c, 0);
  for (std::size_t a : assignment) ++sizes[a];
  std::vector<double> score(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    const std::size_t own = assignment[i];
    if (sizes[own] <= 1) return;
    std::vector<double> sum(c, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sum[assignment[j]] += d(i, j);
    const double a = sum[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c; ++k)
      if (k != own && sizes[k] > 0) b = std::min(b, sum[k] / static_cast<double>(sizes[k]));
    if (!std::isfinite(b)) return;
    const double denom = std::max(a, b);
    score[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  });
  return std::accumulate(score.begin(), score.end(), 0.0) / static_cast<double>(n);
}

namespace {

double assign(const DistanceMatrix& d, const std::vector<std::size_t>& medoids,
              std::vector<std::size_t>& assignment) {
  double cost = 0.0;
  for (std::size_t i = 0; i < d.n; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < medoids.size(); ++k)
      if (d(i, medoids[k]) < d(i, medoids[best])) best = k;
    // A medoid always belongs to its own cluster, even with tied distances.
    for (std::size_t k = 0; k < medoids.size(); ++k)
      if (medoids[k] == i) best = k;
    assignment[i] = best;
    cost += d(i, medoids[best]);
  }
  return cost;
}

}  // namespace

Clustering kmedoids(const DistanceMatrix& d, std::size_t c, std::uint64_t seed, std::size_t restarts) {
  const std::size_t n = d.n;
  if (c < 2 || c > n)
    throw Error(Errc::kTooFewRecords, std::to_string(n) + " records cannot form " + std::to_string(c) +
                                          " clusters");
  Clustering best;
  best.cost = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> pool(n);
  for (std::size_t run = 0; run < std::max<std::size_t>(1, restarts); ++run) {
    Rng rng(stream_seed(seed, run));
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < c; ++i) std::swap(pool[i], pool[i + rng.below(n - i)]);
    std::vector<std::size_t> medoids(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(c));
    std::vector<std::size_t> assignment(n);
    double cost = assign(d, medoids, assignment);
    for (std::size_t iter = 0; iter < 100; ++iter) {
      bool moved = false;
      for (std::size_t k = 0; k < c; ++k) {
        std::size_t arg = medoids[k];
        double low = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
          if (assignment[i] != k) continue;
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j)
            if (assignment[j] == k) s += d(i, j);
          if (s < low) {
            low = s;
            arg = i;
          }
        }
        if (arg != medoids[k]) {
          medoids[k] = arg;
          moved = true;
        }
      }
      if (!moved) break;
      const double next = assign(d, medoids, assignment);
      if (!(next < cost)) {
        cost = next;
        break;
      }
      cost = next;
    }
    if (cost < best.cost) {
      best.cost = cost;
      best.medoids = medoids;
      best.assignment = assignment;
    }
  }
  best.silhouette = silhouette(d, best.assignment, c);
  return best;
}

Clustering kmedoids_cluster(std::span<const TopKList> records, std::size_t c, double p,
                            std::uint64_t seed, std::size_t restarts) {
  if (c < 2 || c > records.size())
    throw Error(Errc::kTooFewRecords, std::to_string(records.size()) + " records cannot form " +
                                          std::to_string(c) + " clusters");
  return kmedoids(pairwise_distances(records, p), c, seed, restarts);
}

}  // namespace topk
