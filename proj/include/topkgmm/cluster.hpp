#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "topkgmm/core.hpp"

namespace topk {

/// Symmetric n x n matrix of kendall_p_distance values, row-major.
struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<float> values;

  float operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

DistanceMatrix pairwise_distances(std::span<const TopKList> records, double p);

struct Clustering {
  std::vector<std::size_t> medoids;     // record indices
  std::vector<std::size_t> assignment;  // cluster per record
  double cost = 0.0;                    // sum of distances to the medoid
  double silhouette = 0.0;              // mean over records
};

/// Mean silhouette; records alone in their cluster score 0.
double silhouette(const DistanceMatrix& d, const std::vector<std::size_t>& assignment, std::size_t c);

/// k-medoids with alternating assignment and medoid updates from `restarts`
/// seeded random starts; keeps the lowest-cost run.
Clustering kmedoids(const DistanceMatrix& d, std::size_t c, std::uint64_t seed,
                    std::size_t restarts = 20);

Clustering kmedoids_cluster(std::span<const TopKList> records, std::size_t c, double p,
                            std::uint64_t seed, std::size_t restarts = 20);

}  // namespace topk
