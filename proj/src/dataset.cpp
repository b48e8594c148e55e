#include "topkgmm/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>

#include "topkgmm/random.hpp"

namespace topk {

namespace {

bool is_integer(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = s[0] == '-' ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  return true;
}

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace

PreferenceDataset read_orders(std::istream& in, OrderFormat format, std::size_t min_universe) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string> toks = tokens(line);
    if (toks.empty() || toks.front()[0] == '#') continue;
    if (format == OrderFormat::kSushi3) {
      if (!header_seen) {
        // The first line carries counts that are not needed here.
        header_seen = true;
        continue;
      }
      if (toks.size() < 3)
        throw Error(Errc::kMalformedLine, "line " + std::to_string(line_no) + ": too few tokens");
      for (std::size_t i = 0; i < 2; ++i)
        if (!is_integer(toks[i]))
          throw Error(Errc::kMalformedLine, "line " + std::to_string(line_no) + ": bad leading field");
      toks.erase(toks.begin(), toks.begin() + 2);
    }
    for (const std::string& t : toks)
      if (!is_integer(t) || t[0] == '-')
        throw Error(Errc::kMalformedLine, "line " + std::to_string(line_no) + ": bad item '" + t + "'");
    if (!rows.empty() && toks.size() != rows.front().size())
      throw Error(Errc::kInconsistentK, "line " + std::to_string(line_no) + " has " +
                                            std::to_string(toks.size()) + " items, expected " +
                                            std::to_string(rows.front().size()));
    rows.push_back(std::move(toks));
  }
  if (rows.empty()) throw Error(Errc::kEmptyDataset, "no records found");

  // Numeric order of the external ids, so plain files that already use
  // 1..n keep their ids.
  std::map<unsigned long long, std::string> distinct;
  for (const auto& row : rows)
    for (const auto& t : row) distinct.emplace(std::stoull(t), t);

  PreferenceDataset data;
  data.labels.push_back("");
  std::unordered_map<unsigned long long, ItemId> dense;
  for (const auto& [value, label] : distinct) {
    dense.emplace(value, static_cast<ItemId>(data.labels.size()));
    data.labels.push_back(label);
  }
  const std::size_t u = std::max(data.labels.size(), min_universe);
  while (data.labels.size() < u) data.labels.push_back("");
  data.universe = Universe(u, true);
  data.k = rows.front().size();
  data.records.reserve(rows.size());
  std::vector<ItemId> ids;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    ids.clear();
    for (const auto& t : rows[r]) ids.push_back(dense.at(std::stoull(t)));
    try {
      data.records.push_back(TopKList::make(ids, data.universe));
    } catch (const Error& e) {
      throw Error(Errc::kMalformedLine, "record " + std::to_string(r + 1) + ": " + e.what());
    }
  }
  return data;
}

PreferenceDataset load_orders(const std::string& path, OrderFormat format, std::size_t min_universe) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path);
  return read_orders(in, format, min_universe);
}

PreferenceDataset with_records(const PreferenceDataset& like, std::vector<TopKList> records) {
  PreferenceDataset out;
  out.universe = like.universe;
  out.k = like.k;
  out.labels = like.labels;
  out.records = std::move(records);
  return out;
}

std::pair<PreferenceDataset, PreferenceDataset> split(const PreferenceDataset& data,
                                                      double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0))
    throw Error(Errc::kInvalidArgument, "train fraction must lie in (0, 1)");
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  auto cut = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
  if (n >= 2) cut = std::clamp<std::size_t>(cut, 1, n - 1);
  std::vector<TopKList> train, test;
  for (std::size_t i = 0; i < n; ++i) (i < cut ? train : test).push_back(data.records[order[i]]);
  return {with_records(data, std::move(train)), with_records(data, std::move(test))};
}

std::vector<std::string> read_label_file(const std::string& path, std::size_t u) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path);
  std::vector<std::string> labels(u);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream row(line);
    long long id;
    std::string label;
    if (!(row >> id)) continue;
    if (id < 0 || static_cast<std::size_t>(id) >= u || !(row >> label))
      throw Error(Errc::kMalformedLine, path + ":" + std::to_string(line_no) + ": bad label entry");
    labels[static_cast<std::size_t>(id)] = label;
  }
  return labels;
}

}  // namespace topk
