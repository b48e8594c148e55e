#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "topkgmm/core.hpp"

namespace topk {

enum class OrderFormat {
  kSushi3,  // header line, then `<a> <b> <ids...>` per record
  kPlain,   // `<ids...>` per record
};

/// Top-k lists over one universe, all of the same k. Id 0 is the no-purchase
/// option; external labels map to dense ids starting at 1.
struct PreferenceDataset {
  Universe universe;
  std::size_t k = 0;
  std::vector<TopKList> records;
  std::vector<std::string> labels;  // dense id -> external label; labels[0] is empty

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
};

/// Parses a dataset. External ids are sorted (numerically when all are
/// integers) and renumbered from 1. `min_universe` raises the universe size
/// when the file does not mention every item.
PreferenceDataset read_orders(std::istream& in, OrderFormat format, std::size_t min_universe = 0);
PreferenceDataset load_orders(const std::string& path, OrderFormat format,
                              std::size_t min_universe = 0);

/// Random disjoint split with round(train_frac * n) training records, kept
/// in [1, n-1] when n >= 2.
std::pair<PreferenceDataset, PreferenceDataset> split(const PreferenceDataset& data,
                                                      double train_frac, std::uint64_t seed);

/// Dataset over the same universe and labels with the given records.
PreferenceDataset with_records(const PreferenceDataset& like, std::vector<TopKList> records);

/// `<dense id> <label>` per line.
std::vector<std::string> read_label_file(const std::string& path, std::size_t u);

}  // namespace topk
