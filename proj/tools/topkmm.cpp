// topkmm: command-line front end for the topkgmm library.
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 numerical or convergence error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "topkgmm/bench.hpp"
#include "topkgmm/choice.hpp"
#include "topkgmm/cluster.hpp"
#include "topkgmm/core.hpp"
#include "topkgmm/dataset.hpp"
#include "topkgmm/eval.hpp"
#include "topkgmm/learn.hpp"
#include "topkgmm/mnl.hpp"
#include "topkgmm/model_io.hpp"
#include "topkgmm/parallel.hpp"
#include "topkgmm/prim.hpp"

namespace {

using namespace topk;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument:
      return kExitUsage;
    case Errc::kNonConvergence:
    case Errc::kTournamentFailure:
    case Errc::kOracleFailure:
    case Errc::kDegenerateLog:
      return kExitNumeric;
    default:
      return kExitData;
  }
}

// Inline model flags shared by several subcommands. --n counts real items;
// the universe adds the no-purchase option as id 0.
struct ModelFlags {
  std::string path;
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<ItemId> center;
  double beta = 0.0;
  double p = 1.0;
  std::vector<double> w;
  double w0 = 1.0;

  void attach(CLI::App* app) {
    app->add_option("--model", path, "model file (topkgmm v1)");
    app->add_option("--n", n, "number of items; ids 1..n, 0 is the no-purchase option");
    app->add_option("--k", k, "list length");
    app->add_option("--center", center, "center ids, comma separated")->delimiter(',');
    app->add_option("--beta", beta, "dispersion");
    app->add_option("--p", p, "incomparability penalty");
    app->add_option("--w", w, "k center weights, or k+1 values starting with w0")->delimiter(',');
    app->add_option("--w0", w0, "weight of items outside the center");
  }

  TopKGMM build() const {
    if (!path.empty()) {
      AnyModel any = load_model(path);
      if (!std::holds_alternative<TopKGMM>(any)) throw UsageError("--model must hold a topkgmm model");
      return std::get<TopKGMM>(any);
    }
    if (n == 0) throw UsageError("give --model or --n/--k/--center");
    const std::size_t kk = k != 0 ? k : center.size();
    if (center.size() != kk) throw UsageError("--center must list exactly k ids");
    std::vector<double> weights;
    if (w.empty()) {
      weights.assign(kk + 1, 1.0);
      weights[0] = w0;
    } else if (w.size() == kk) {
      weights.push_back(w0);
      weights.insert(weights.end(), w.begin(), w.end());
    } else if (w.size() == kk + 1) {
      weights = w;
    } else {
      throw UsageError("--w needs k or k+1 values");
    }
    return TopKGMM(TopKList::make(center, Universe(n + 1, true)), beta, p, std::move(weights));
  }
};

struct DataFlags {
  std::string path;
  std::string format = "plain";
  std::size_t min_universe = 0;

  void attach(CLI::App* app, bool required) {
    auto* opt = app->add_option("--data", path, "preference dataset");
    if (required) opt->required();
    app->add_option("--format", format, "sushi3 or plain")->check(CLI::IsMember({"sushi3", "plain"}));
    app->add_option("--universe", min_universe, "minimum universe size including id 0");
  }

  PreferenceDataset load() const {
    return load_orders(path, format == "sushi3" ? OrderFormat::kSushi3 : OrderFormat::kPlain, min_universe);
  }
};

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw Error(Errc::kIo, "cannot write " + path);
    }
  }
  std::ostream& get() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::string label_of(ItemId id, const std::vector<std::string>& labels) {
  if (id < labels.size() && !labels[id].empty()) return labels[id];
  return std::to_string(id);
}

// Records every query so a run can be replayed as a choice log.
class RecordingOracle final : public ChoiceOracle {
 public:
  explicit RecordingOracle(ChoiceOracle& inner) : inner_(inner) {}
  Universe universe() const override { return inner_.universe(); }
  const std::vector<ChoiceObservation>& log() const { return log_; }

 protected:
  ItemId answer(const Assortment& a) override {
    const ItemId c = inner_.query(a);
    log_.push_back({a, c});
    return c;
  }

 private:
  ChoiceOracle& inner_;
  std::vector<ChoiceObservation> log_;
};

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> parse_grid(const std::vector<std::string>& spec) {
  std::vector<std::size_t> ns, ks;
  for (const std::string& term : spec) {
    const auto eq = term.find('=');
    if (eq == std::string::npos) throw UsageError("grid terms look like n=200,500 or k=8,10");
    const std::string key = term.substr(0, eq);
    std::vector<std::size_t>* dest = key == "n" ? &ns : key == "k" ? &ks : nullptr;
    if (dest == nullptr) throw UsageError("unknown grid key '" + key + "'");
    std::stringstream list(term.substr(eq + 1));
    std::string item;
    while (std::getline(list, item, ',')) {
      try {
        dest->push_back(std::stoul(item));
      } catch (...) {
        throw UsageError("bad grid value '" + item + "'");
      }
    }
  }
  if (ns.empty() || ks.empty()) throw UsageError("grid needs both n= and k= terms");
  return {ns, ks};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized Mallows models over top-k lists"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "worker threads (default: TOPKMM_THREADS or all cores)");

  // sample
  auto* cmd_sample = app.add_subcommand("sample", "draw lists from a model");
  ModelFlags sample_model;
  sample_model.attach(cmd_sample);
  std::size_t sample_count = 10;
  std::uint64_t sample_seed = 0;
  std::string sample_out, sample_labels;
  cmd_sample->add_option("--count", sample_count, "number of lists");
  cmd_sample->add_option("--seed", sample_seed, "random seed");
  cmd_sample->add_option("--out", sample_out, "output file (default stdout)");
  cmd_sample->add_option("--labels", sample_labels, "label file for output ids");

  // pmf
  auto* cmd_pmf = app.add_subcommand("pmf", "exact distribution of a small model");
  ModelFlags pmf_model;
  pmf_model.attach(cmd_pmf);
  std::uint64_t pmf_cap = kDefaultEnumerationCap;
  cmd_pmf->add_option("--cap", pmf_cap, "maximum number of lists to enumerate");

  // choice-prob
  auto* cmd_choice = app.add_subcommand("choice-prob", "exact choice probabilities for an assortment");
  ModelFlags choice_model;
  choice_model.attach(cmd_choice);
  std::vector<ItemId> choice_items;
  std::string choice_oracle = "dypchip";
  cmd_choice->add_option("--assortment", choice_items, "offered ids, comma separated")->delimiter(',');
  cmd_choice->add_option("--oracle", choice_oracle, "dypchip or brute")
      ->check(CLI::IsMember({"dypchip", "brute"}));

  // learn-center
  auto* cmd_learn = app.add_subcommand("learn-center", "learn a center from choice queries");
  ModelFlags learn_model;
  learn_model.attach(cmd_learn);
  DataFlags learn_data;
  learn_data.attach(cmd_learn, false);
  std::string learn_algo = "bucchoi", learn_policy = "abort", learn_log, learn_labels;
  LearnOptions learn_opts;
  std::uint64_t learn_seed = 0;
  cmd_learn->add_option("--algo", learn_algo, "bucchoi or bucchoi2")->check(CLI::IsMember({"bucchoi", "bucchoi2"}));
  cmd_learn->add_option("--r", learn_opts.r, "assortment size");
  cmd_learn->add_option("--m", learn_opts.m, "queries per assortment");
  cmd_learn->add_option("--k-cap", learn_opts.k_cap, "truncate the learned list (0 keeps all)");
  cmd_learn->add_option("--policy", learn_policy, "tournament failure policy: abort or fallback")
      ->check(CLI::IsMember({"abort", "fallback"}));
  cmd_learn->add_option("--seed", learn_seed, "random seed");
  cmd_learn->add_option("--log-out", learn_log, "write every query to a choice log");
  cmd_learn->add_option("--labels", learn_labels, "label file for output ids");

  // find-top
  auto* cmd_find = app.add_subcommand("find-top", "run the top-item test on a choice log");
  std::string find_log;
  std::vector<ItemId> find_items;
  cmd_find->add_option("--log", find_log, "choice log")->required();
  cmd_find->add_option("--assortment", find_items, "assortment to test (default: first in the log)")
      ->delimiter(',');

  // eval
  auto* cmd_eval = app.add_subcommand("eval", "out-of-sample choice-probability error");
  DataFlags eval_data;
  eval_data.attach(cmd_eval, true);
  std::string eval_model, eval_out;
  bool eval_mnl = false;
  double eval_frac = 0.8;
  std::uint64_t eval_split_seed = 0;
  EvalConfig eval_cfg;
  cmd_eval->add_option("--model", eval_model, "topkgmm or mnl model file");
  cmd_eval->add_flag("--fit-mnl", eval_mnl, "fit an MNL baseline on the training split");
  cmd_eval->add_option("--train-frac", eval_frac, "training fraction");
  cmd_eval->add_option("--split-seed", eval_split_seed, "split seed");
  cmd_eval->add_option("--assortments", eval_cfg.num_assortments, "number of test assortments");
  cmd_eval->add_option("--r", eval_cfg.r, "assortment size");
  cmd_eval->add_option("--samples", eval_cfg.samples, "choices sampled per assortment");
  cmd_eval->add_option("--seed", eval_cfg.seed, "evaluation seed");
  cmd_eval->add_option("--out", eval_out, "also write the table here");

  // grid
  auto* cmd_grid = app.add_subcommand("grid", "grid search over p and beta");
  DataFlags grid_data;
  grid_data.attach(cmd_grid, true);
  std::vector<double> grid_p{0.01, 0.1, 0.5, 1, 2, 5}, grid_beta{0.05, 0.1, 0.2, 0.5, 1, 2};
  double grid_frac = 0.8;
  std::uint64_t grid_split_seed = 0;
  GridConfig grid_cfg;
  grid_cfg.learn.m = 1000;
  grid_cfg.learn.k_cap = 15;
  bool grid_mnl = false;
  std::string grid_out;
  cmd_grid->add_option("--p-grid", grid_p, "p values")->delimiter(',');
  cmd_grid->add_option("--beta-grid", grid_beta, "beta values")->delimiter(',');
  cmd_grid->add_option("--train-frac", grid_frac, "training fraction");
  cmd_grid->add_option("--split-seed", grid_split_seed, "split seed");
  cmd_grid->add_option("--m", grid_cfg.learn.m, "queries per assortment when learning the center");
  cmd_grid->add_option("--k-cap", grid_cfg.learn.k_cap, "maximum learned center length");
  cmd_grid->add_option("--learn-seed", grid_cfg.learn_seed, "seed for center learning");
  cmd_grid->add_option("--assortments", grid_cfg.eval.num_assortments, "number of test assortments");
  cmd_grid->add_option("--r", grid_cfg.eval.r, "assortment size");
  cmd_grid->add_option("--samples", grid_cfg.eval.samples, "choices sampled per assortment");
  cmd_grid->add_option("--seed", grid_cfg.eval.seed, "evaluation seed");
  cmd_grid->add_flag("--with-mnl", grid_mnl, "append an MNL baseline row");
  cmd_grid->add_option("--out", grid_out, "also write the table here");

  // cluster
  auto* cmd_cluster = app.add_subcommand("cluster", "k-medoids under the p-parametrized distance");
  DataFlags cluster_data;
  cluster_data.attach(cmd_cluster, true);
  std::size_t cluster_c = 2, cluster_restarts = 20;
  double cluster_p = 0.5;
  std::uint64_t cluster_seed = 0;
  bool cluster_assign = false;
  cmd_cluster->add_option("--c", cluster_c, "number of clusters");
  cmd_cluster->add_option("--p", cluster_p, "incomparability penalty");
  cmd_cluster->add_option("--seed", cluster_seed, "random seed");
  cmd_cluster->add_option("--restarts", cluster_restarts, "random restarts");
  cmd_cluster->add_flag("--assignments", cluster_assign, "print the cluster of every record");

  // bench
  auto* cmd_bench = app.add_subcommand("bench", "timing table for sampling and choice probabilities");
  std::vector<std::string> bench_spec{"n=200,500", "k=8,10"};
  BenchSettings bench_settings;
  cmd_bench->add_option("--grid", bench_spec, "terms like n=200,500 k=8,10");
  cmd_bench->add_option("--samples", bench_settings.samples, "timed draws per cell");
  cmd_bench->add_option("--repeats", bench_settings.repeats, "best-of repeats");
  cmd_bench->add_option("--assortment-size", bench_settings.assortment_size, "0 skips choice timing");
  cmd_bench->add_option("--seed", bench_settings.seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (threads != 0) set_thread_limit(threads);

  try {
    if (*cmd_sample) {
      const Sampler sampler(sample_model.build());
      const std::vector<TopKList> batch = sampler.sample_batch(sample_count, sample_seed);
      Output out(sample_out);
      if (sample_labels.empty()) {
        write_sample_batch(out.get(), batch, sampler.model().u(), sampler.model().k(), sample_seed);
      } else {
        const auto labels = read_label_file(sample_labels, sampler.model().u());
        out.get() << "# topkgmm-samples u=" << sampler.model().u() << " k=" << sampler.model().k()
                  << " seed=" << sample_seed << '\n';
        for (const TopKList& tau : batch) {
          for (std::size_t i = 0; i < tau.k(); ++i) out.get() << (i ? " " : "") << label_of(tau[i], labels);
          out.get() << '\n';
        }
      }
    } else if (*cmd_pmf) {
      const ExactPmf pmf = exact_pmf(pmf_model.build(), pmf_cap);
      std::cout.precision(17);
      for (const auto& [tau, prob] : pmf.entries()) {
        std::cout << prob << '\t';
        for (std::size_t i = 0; i < tau.k(); ++i) std::cout << (i ? " " : "") << tau[i];
        std::cout << '\n';
      }
    } else if (*cmd_choice) {
      const TopKGMM model = choice_model.build();
      const Assortment a = Assortment::make(choice_items, model.universe());
      const ChoiceDistribution dist =
          choice_oracle == "brute" ? choice_prob_bruteforce(model, a) : dypchip(model, a);
      write_choice_distribution(std::cout, dist);
    } else if (*cmd_learn) {
      learn_opts.policy = learn_policy == "fallback" ? TournamentPolicy::kScoreFallback : TournamentPolicy::kAbort;
      std::unique_ptr<ChoiceOracle> base;
      std::vector<std::string> labels;
      if (!learn_data.path.empty()) {
        PreferenceDataset data = learn_data.load();
        labels = data.labels;
        base = std::make_unique<DataOracle>(std::move(data.records), learn_seed);
      } else {
        base = std::make_unique<ModelOracle>(learn_model.build(), learn_seed);
      }
      if (!learn_labels.empty()) labels = read_label_file(learn_labels, base->universe().size());
      RecordingOracle oracle(*base);
      ChoiceOracle& used = learn_log.empty() ? *base : static_cast<ChoiceOracle&>(oracle);
      const LearnedCenter learned = learn_algo == "bucchoi2" ? bucchoi2(used, learn_opts) : bucchoi(used, learn_opts);
      std::cout << "# learn-center algo=" << learn_algo << " r=" << learn_opts.r << " m=" << learn_opts.m
                << " seed=" << learn_seed << '\n';
      std::cout << "k_hat " << learned.k_hat() << '\n';
      std::cout << "center";
      for (ItemId id : learned.order) std::cout << ' ' << label_of(id, labels);
      std::cout << '\n';
      std::cout << "queries " << learned.queries_used << '\n';
      std::cout << "find_top_calls " << learned.find_top_calls << '\n';
      std::cout << "retries " << learned.retries << '\n';
      std::cout << "fallbacks " << learned.fallbacks << '\n';
      if (!learn_log.empty()) {
        Output out(learn_log);
        write_choice_log(out.get(), oracle.log(), base->universe().size());
      }
    } else if (*cmd_find) {
      std::ifstream in(find_log);
      if (!in) throw Error(Errc::kIo, "cannot open " + find_log);
      std::size_t u = 0;
      const std::vector<ChoiceObservation> log = read_choice_log(in, &u);
      if (log.empty()) throw Error(Errc::kEmptyDataset, "choice log has no observations");
      const Assortment target =
          find_items.empty() ? log.front().assortment : Assortment::make(find_items, Universe(u, true));
      std::vector<ItemId> choices;
      for (const ChoiceObservation& obs : log)
        if (obs.assortment.items() == target.items()) choices.push_back(obs.chosen);
      if (choices.empty()) throw Error(Errc::kEmptyDataset, "assortment never offered in the log");
      const std::optional<ItemId> top = find_top(target, choices);
      std::cout << "observations " << choices.size() << '\n';
      std::cout << "top " << (top ? std::to_string(*top) : std::string("NONE")) << '\n';
    } else if (*cmd_eval) {
      const PreferenceDataset data = eval_data.load();
      const auto [train, test] = split(data, eval_frac, eval_split_seed);
      Output file(eval_out);
      std::vector<EvalReport> reports;
      if (!eval_model.empty()) {
        const AnyModel any = load_model(eval_model);
        if (const auto* m = std::get_if<TopKGMM>(&any)) {
          if (m->u() != data.universe.size()) throw Error(Errc::kUniverseMismatch, "model and data universes differ");
          const ProfileDistribution profiles = profile_distribution(*m);
          EvalReport r = evaluate([&](const Assortment& a) { return dypchip(*m, profiles, a); }, test, eval_cfg);
          r.predictor = "topkgmm";
          r.p = m->p();
          r.beta = m->beta();
          reports.push_back(r);
        } else {
          const auto& mnl = std::get<MNLModel>(any);
          EvalReport r = evaluate([&](const Assortment& a) { return mnl_choice_prob(mnl, a); }, test, eval_cfg);
          r.predictor = "mnl";
          reports.push_back(r);
        }
      }
      if (eval_mnl) reports.push_back(evaluate_mnl(train, test, eval_cfg));
      if (reports.empty()) throw UsageError("give --model and/or --fit-mnl");
      write_eval_header(std::cout);
      for (const auto& r : reports) write_eval_row(std::cout, r);
      if (!eval_out.empty()) {
        write_eval_header(file.get());
        for (const auto& r : reports) write_eval_row(file.get(), r);
      }
    } else if (*cmd_grid) {
      const PreferenceDataset data = grid_data.load();
      const auto [train, test] = split(data, grid_frac, grid_split_seed);
      const GridResult result = grid_search(train, test, grid_cfg, grid_p, grid_beta);
      std::vector<EvalReport> reports;
      for (const GridCell& cell : result.cells) reports.push_back(cell.report);
      if (grid_mnl) reports.push_back(evaluate_mnl(train, test, grid_cfg.eval));
      auto emit = [&](std::ostream& out) {
        out << "# center";
        for (ItemId id : result.center) out << ' ' << label_of(id, data.labels);
        out << '\n';
        write_eval_header(out);
        for (const auto& r : reports) write_eval_row(out, r);
        const GridCell& best = result.cells[result.best];
        out << "# best p=" << best.p << " beta=" << best.beta << " error=" << best.report.mean_error << '\n';
      };
      emit(std::cout);
      if (!grid_out.empty()) {
        Output file(grid_out);
        emit(file.get());
      }
    } else if (*cmd_cluster) {
      const PreferenceDataset data = cluster_data.load();
      const Clustering c = kmedoids_cluster(data.records, cluster_c, cluster_p, cluster_seed, cluster_restarts);
      std::vector<std::size_t> sizes(cluster_c, 0);
      for (std::size_t a : c.assignment) ++sizes[a];
      std::cout.precision(10);
      std::cout << "silhouette " << c.silhouette << '\n';
      std::cout << "cost " << c.cost << '\n';
      for (std::size_t k = 0; k < cluster_c; ++k)
        std::cout << "cluster " << k << " size " << sizes[k] << " medoid " << c.medoids[k] << '\n';
      if (cluster_assign)
        for (std::size_t i = 0; i < c.assignment.size(); ++i) std::cout << i << '\t' << c.assignment[i] << '\n';
    } else if (*cmd_bench) {
      const auto [ns, ks] = parse_grid(bench_spec);
      const double calibration = calibration_seconds();
      write_bench_table(std::cout, bench_grid(ns, ks, bench_settings), calibration);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}
