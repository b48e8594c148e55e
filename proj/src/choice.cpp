#include "topkgmm/choice.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "topkgmm/parallel.hpp"

namespace topk {

Assortment Assortment::make(std::span<const ItemId> items, Universe universe) {
  Assortment a;
  a.universe_ = universe;
  a.items_.assign(items.begin(), items.end());
  std::sort(a.items_.begin(), a.items_.end());
  for (std::size_t i = 0; i < a.items_.size(); ++i) {
    const ItemId id = a.items_[i];
    if (id == kNoPurchase)
      throw Error(Errc::kInvalidAssortment, "the no-purchase option cannot be offered");
    if (!universe.contains(id))
      throw Error(Errc::kItemOutOfRange, "item " + std::to_string(id) + " not below u=" +
                                             std::to_string(universe.size()));
    if (i > 0 && a.items_[i - 1] == id)
      throw Error(Errc::kInvalidAssortment, "item " + std::to_string(id) + " offered twice");
  }
  return a;
}

bool Assortment::contains(ItemId id) const noexcept {
  return std::binary_search(items_.begin(), items_.end(), id);
}

std::vector<ItemId> Assortment::with_null() const {
  std::vector<ItemId> out;
  out.reserve(items_.size() + 1);
  out.push_back(kNoPurchase);
  out.insert(out.end(), items_.begin(), items_.end());
  return out;
}

ChoiceDistribution::ChoiceDistribution(std::vector<std::pair<ItemId, double>> entries)
    : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end());
}

double ChoiceDistribution::operator[](ItemId id) const {
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                                   [](const auto& e, ItemId v) { return e.first < v; });
  return it != entries_.end() && it->first == id ? it->second : 0.0;
}

double ChoiceDistribution::total() const {
  double sum = 0.0;
  for (const auto& e : entries_) sum += e.second;
  return sum;
}

void write_choice_distribution(std::ostream& out, const ChoiceDistribution& dist) {
  const auto old = out.precision(17);
  for (const auto& [id, prob] : dist.entries()) out << id << ' ' << prob << '\n';
  out.precision(old);
}

namespace {

void require_same_universe(const Universe& a, const Universe& b) {
  if (!(a == b))
    throw Error(Errc::kUniverseMismatch, "u=" + std::to_string(a.size()) + " vs u=" +
                                             std::to_string(b.size()));
}

}  // namespace

ItemId choice(const TopKList& tau, const Assortment& a, Rng& rng) {
  require_same_universe(tau.universe(), a.universe());
  for (ItemId id : tau.items())
    if (a.offers(id)) return id;
  const std::uint64_t pick = rng.below(a.size() + 1);
  return pick == 0 ? kNoPurchase : a.items()[pick - 1];
}

namespace {

// Per-assortment facts shared by all profiles.
struct OfferLayout {
  std::vector<ItemId> options;            // with_null()
  std::vector<std::size_t> center_rank;   // 1-based center rank per option, 0 if outside
  std::size_t outside_offered = 0;        // offered options outside the center
  std::uint64_t center_mask = 0;          // center ranks that are offered
};

OfferLayout layout_for(const TopKGMM& model, const Assortment& a) {
  OfferLayout lay;
  lay.options = a.with_null();
  lay.center_rank.resize(lay.options.size());
  for (std::size_t i = 0; i < lay.options.size(); ++i) {
    const std::size_t r = model.center().rank_of(lay.options[i]);
    if (r < model.k()) {
      lay.center_rank[i] = r + 1;
      lay.center_mask |= std::uint64_t{1} << r;
    } else {
      ++lay.outside_offered;
    }
  }
  return lay;
}

// Probability that an ordered uniform draw of m of n fillers avoids all r
// offered ones.
double miss_probability(std::size_t n, std::size_t r, std::size_t m) {
  if (m > n - r) return 0.0;
  double prob = 1.0;
  for (std::size_t t = 0; t < m; ++t)
    prob *= static_cast<double>(n - r - t) / static_cast<double>(n - t);
  return prob;
}

double pi_bar_impl(Profile s, const OfferLayout& lay, std::size_t u, std::size_t k) {
  if ((s.members & lay.center_mask) != 0) return 0.0;
  return miss_probability(u - k, lay.outside_offered, k - s.ell()) /
         static_cast<double>(lay.options.size());
}

// Adds the ranked-winner mass of profile s to out (indexed like lay.options).
void profile_winner_mass(const TopKGMM& model, Profile s, const OfferLayout& lay, double weight,
                         std::vector<double>& out) {
  const std::size_t k = model.k();
  const std::size_t n = model.u() - k;
  const std::size_t m = k - s.ell();
  const std::size_t r = lay.outside_offered;

  // rows[0] is the filler group; rows[c] is the c-th inserted offered center
  // item. Each row holds the mass of "this row's item is the current winner
  // at 1-based position j".
  std::vector<std::vector<double>> rows(1, std::vector<double>(k + 2, 0.0));
  std::vector<std::size_t> row_option(1, lay.options.size());
  double none = 1.0;
  if (r > 0) {
    double miss = 1.0;
    for (std::size_t j = 1; j <= m; ++j) {
      rows[0][j] = miss * static_cast<double>(r) / static_cast<double>(n - j + 1);
      miss *= static_cast<double>(n - r - (j - 1)) / static_cast<double>(n - j + 1);
    }
    none = miss;
  }

  std::vector<double> pos, cum;
  const std::vector<std::size_t> ranks = s.ranks();
  std::size_t len = m;
  for (auto it = ranks.rbegin(); it != ranks.rend(); ++it, ++len) {
    const std::size_t rank = *it;
    const double x = model.beta() * model.weight_at_rank(rank);
    const double log_norm = log_geometric_sum(x, len);
    pos.assign(len + 1, 0.0);
    cum.assign(len + 1, 0.0);
    double running = 0.0;
    for (std::size_t t = 0; t <= len; ++t) {
      pos[t] = std::exp(-x * static_cast<double>(t) - log_norm);
      running += pos[t];
      cum[t] = running;
    }
    // Mass at or below position j survives; an insertion at x < j lands above.
    auto above = [&](std::size_t j) { return j == 0 ? 0.0 : std::min(1.0, cum[j - 1]); };

    std::size_t option = lay.options.size();
    if ((lay.center_mask >> (rank - 1)) & 1U) {
      for (std::size_t i = 0; i < lay.options.size(); ++i)
        if (lay.center_rank[i] == rank) option = i;
    }

    if (option == lay.options.size()) {
      for (auto& row : rows) {
        for (std::size_t j = len + 1; j >= 1; --j) {
          const double stay = j <= len ? row[j] * (1.0 - above(j)) : 0.0;
          const double shift = j >= 2 ? row[j - 1] * above(j - 1) : 0.0;
          row[j] = stay + shift;
        }
      }
    } else {
      // tail[j] = total winner mass at positions >= j before this insertion.
      std::vector<double> tail(len + 2, 0.0);
      for (std::size_t j = len; j >= 1; --j) {
        double at = 0.0;
        for (const auto& row : rows) at += row[j];
        tail[j] = tail[j + 1] + at;
      }
      std::vector<double> fresh(k + 2, 0.0);
      for (std::size_t t = 0; t <= len; ++t) fresh[t + 1] = pos[t] * (none + tail[t + 1]);
      for (auto& row : rows)
        for (std::size_t j = 1; j <= len; ++j) row[j] *= 1.0 - above(j);
      rows.push_back(std::move(fresh));
      row_option.push_back(option);
      none = 0.0;
    }
  }

  auto row_total = [](const std::vector<double>& row) {
    double sum = 0.0;
    for (double v : row) sum += v;
    return sum;
  };
  if (r > 0) {
    const double share = weight * row_total(rows[0]) / static_cast<double>(r);
    for (std::size_t i = 0; i < lay.options.size(); ++i)
      if (lay.center_rank[i] == 0) out[i] += share;
  }
  for (std::size_t c = 1; c < rows.size(); ++c) out[row_option[c]] += weight * row_total(rows[c]);
}

}  // namespace

double pi_bar(Profile s, const Assortment& a, const TopKGMM& model) {
  require_same_universe(model.universe(), a.universe());
  if (!is_feasible(s, model.u(), model.k()))
    throw Error(Errc::kInfeasibleProfile, "profile cannot be completed");
  return pi_bar_impl(s, layout_for(model, a), model.u(), model.k());
}

ChoiceDistribution dypchip(const TopKGMM& model, const Assortment& a, std::uint64_t profile_cap) {
  require_same_universe(model.universe(), a.universe());
  if (a.empty()) return ChoiceDistribution({{kNoPurchase, 1.0}});
  return dypchip(model, profile_distribution(model, profile_cap), a);
}

ChoiceDistribution dypchip(const TopKGMM& model, const ProfileDistribution& profiles,
                           const Assortment& a) {
  require_same_universe(model.universe(), a.universe());
  if (profiles.u() != model.u() || profiles.k() != model.k())
    throw Error(Errc::kInvalidArgument, "profile table was built for another model");
  const OfferLayout lay = layout_for(model, a);
  const std::size_t width = lay.options.size();
  if (a.empty()) return ChoiceDistribution({{kNoPurchase, 1.0}});

  // Fixed chunking keeps the floating-point reduction order independent of
  // the worker count.
  constexpr std::size_t kChunk = 1024;
  const std::size_t total = profiles.size();
  const std::size_t chunks = (total + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> partial(chunks, std::vector<double>(width, 0.0));
  parallel_for(chunks, [&](std::size_t c) {
    std::vector<double>& acc = partial[c];
    const std::size_t end = std::min(total, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      const double w = profiles.probabilities()[i];
      if (w == 0.0) continue;
      const Profile s = profiles.profiles()[i];
      profile_winner_mass(model, s, lay, w, acc);
      const double tie = w * pi_bar_impl(s, lay, model.u(), model.k());
      if (tie != 0.0)
        for (double& v : acc) v += tie;
    }
  });

  std::vector<double> sum(width, 0.0);
  for (const auto& part : partial)
    for (std::size_t i = 0; i < width; ++i) sum[i] += part[i];
  std::vector<std::pair<ItemId, double>> entries;
  entries.reserve(width);
  for (std::size_t i = 0; i < width; ++i) entries.emplace_back(lay.options[i], sum[i]);
  return ChoiceDistribution(std::move(entries));
}

ChoiceDistribution choice_prob_bruteforce(const ExactPmf& pmf, const Assortment& a) {
  const std::vector<ItemId> options = a.with_null();
  std::vector<double> sum(options.size(), 0.0);
  for (const auto& [tau, prob] : pmf.entries()) {
    require_same_universe(tau.universe(), a.universe());
    bool hit = false;
    for (ItemId id : tau.items()) {
      if (!a.offers(id)) continue;
      const auto at = std::lower_bound(options.begin() + 1, options.end(), id);
      sum[id == kNoPurchase ? 0 : static_cast<std::size_t>(at - options.begin())] += prob;
      hit = true;
      break;
    }
    if (!hit)
      for (double& v : sum) v += prob / static_cast<double>(options.size());
  }
  std::vector<std::pair<ItemId, double>> entries;
  for (std::size_t i = 0; i < options.size(); ++i) entries.emplace_back(options[i], sum[i]);
  return ChoiceDistribution(std::move(entries));
}

ChoiceDistribution choice_prob_bruteforce(const TopKGMM& model, const Assortment& a,
                                          std::uint64_t cap) {
  require_same_universe(model.universe(), a.universe());
  return choice_prob_bruteforce(exact_pmf(model, cap), a);
}

void MixtureModel::validate() const {
  if (components.empty()) throw Error(Errc::kInvalidModel, "mixture has no components");
  double total = 0.0;
  for (const auto& [model, alpha] : components) {
    if (!(alpha > 0.0 && alpha <= 1.0))
      throw Error(Errc::kInvalidModel, "mixture weight outside (0, 1]");
    if (!(model.universe() == components.front().first.universe()))
      throw Error(Errc::kUniverseMismatch, "mixture components use different universes");
    total += alpha;
  }
  if (std::abs(total - 1.0) > 1e-12) throw Error(Errc::kInvalidModel, "mixture weights do not sum to 1");
}

ChoiceDistribution mixture_choice_prob(const MixtureModel& mix, const Assortment& a) {
  mix.validate();
  std::vector<std::pair<ItemId, double>> entries;
  for (ItemId id : a.with_null()) entries.emplace_back(id, 0.0);
  for (const auto& [model, alpha] : mix.components) {
    const ChoiceDistribution part = dypchip(model, a);
    for (std::size_t i = 0; i < entries.size(); ++i) entries[i].second += alpha * part.entries()[i].second;
  }
  return ChoiceDistribution(std::move(entries));
}

void write_choice_log(std::ostream& out, std::span<const ChoiceObservation> log, std::size_t u) {
  out << "# choicelog u=" << u << '\n';
  for (const ChoiceObservation& obs : log) {
    out << obs.chosen << " :";
    for (ItemId id : obs.assortment.items()) out << ' ' << id;
    out << '\n';
  }
}

std::vector<ChoiceObservation> read_choice_log(std::istream& in, std::size_t* universe_size) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# choicelog u=", 0) != 0)
    throw Error(Errc::kMalformed, "missing '# choicelog u=<u>' header");
  std::size_t u = 0;
  try {
    u = std::stoul(line.substr(14));
  } catch (...) {
    throw Error(Errc::kMalformed, "bad universe size in choice log header");
  }
  const Universe universe(u, true);
  if (universe_size != nullptr) *universe_size = u;

  std::vector<ChoiceObservation> log;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos)
      throw Error(Errc::kMalformedLine, "line " + std::to_string(line_no) + ": missing ':'");
    std::istringstream head(line.substr(0, colon)), tail(line.substr(colon + 1));
    long long chosen = -1;
    if (!(head >> chosen) || chosen < 0)
      throw Error(Errc::kMalformedLine, "line " + std::to_string(line_no) + ": bad chosen id");
    std::vector<ItemId> ids;
    long long id;
    while (tail >> id) {
      if (id < 0) throw Error(Errc::kMalformedLine, "line " + std::to_string(line_no) + ": negative id");
      ids.push_back(static_cast<ItemId>(id));
    }
    if (!tail.eof())
      throw Error(Errc::kMalformedLine, "line " + std::to_string(line_no) + ": bad assortment id");
    ChoiceObservation obs{Assortment::make(ids, universe), static_cast<ItemId>(chosen)};
    if (!obs.assortment.offers(obs.chosen))
      throw Error(Errc::kChoiceOutsideAssortment,
                  "line " + std::to_string(line_no) + ": chosen item not offered");
    log.push_back(std::move(obs));
  }
  return log;
}

}  // namespace topk
