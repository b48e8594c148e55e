#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "topkgmm/core.hpp"

namespace topk {

struct BenchSettings {
  std::size_t samples = 20000;      // draws timed per cell
  std::size_t repeats = 3;          // best-of repeats
  std::size_t assortment_size = 5;  // 0 skips the choice-probability column
  double beta = 0.5;
  double p = 0.5;
  std::uint64_t seed = 1;
};

struct BenchRow {
  std::size_t n = 0, k = 0;
  double preprocess_s = 0.0;  // profile table build
  double per_sample_s = 0.0;  // amortized draw after preprocessing
  double choice_prob_s = 0.0; // one exact choice-probability evaluation
};

/// Unit-weight model over n items plus the no-purchase option, center 1..k.
TopKGMM bench_model(std::size_t n, std::size_t k, double beta, double p);

BenchRow bench_cell(std::size_t n, std::size_t k, const BenchSettings& settings);

std::vector<BenchRow> bench_grid(const std::vector<std::size_t>& ns, const std::vector<std::size_t>& ks,
                                 const BenchSettings& settings);

/// Seconds for a fixed integer workload, used to normalize timings across machines.
double calibration_seconds();

void write_bench_table(std::ostream& out, const std::vector<BenchRow>& rows, double calibration);

}  // namespace topk
