#include "topkgmm/model_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace topk {

namespace {

void put_double(std::ostream& out, double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  out << s.str();
}

// Reads `key value...` lines in the fixed order the writer emits them.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::istringstream expect(const std::string& key) {
    std::string line;
    while (std::getline(in_, line))
      if (!line.empty()) break;
    if (!in_ && line.empty()) throw Error(Errc::kMalformed, "missing '" + key + "' line");
    std::istringstream row(line);
    std::string got;
    row >> got;
    if (got != key) throw Error(Errc::kMalformed, "expected '" + key + "', found '" + got + "'");
    return row;
  }

  template <class T>
  T scalar(const std::string& key) {
    std::istringstream row = expect(key);
    T value;
    if (!(row >> value)) throw Error(Errc::kMalformed, "bad value for '" + key + "'");
    std::string rest;
    if (row >> rest) throw Error(Errc::kMalformed, "trailing data after '" + key + "'");
    return value;
  }

  template <class T>
  std::vector<T> list(const std::string& key, std::size_t count) {
    std::istringstream row = expect(key);
    std::vector<T> values;
    T v;
    while (row >> v) values.push_back(v);
    if (!row.eof() || values.size() != count)
      throw Error(Errc::kMalformed, "expected " + std::to_string(count) + " values for '" + key + "'");
    return values;
  }

 private:
  std::istream& in_;
};

}  // namespace

void write_model(std::ostream& out, const TopKGMM& model) {
  out << "topkgmm v1\n";
  out << "u " << model.u() << '\n';
  out << "k " << model.k() << '\n';
  out << "center";
  for (ItemId id : model.center().items()) out << ' ' << id;
  out << "\nbeta ";
  put_double(out, model.beta());
  out << "\np ";
  put_double(out, model.p());
  out << "\nw0 ";
  put_double(out, model.w0());
  out << "\nw";
  for (std::size_t i = 1; i <= model.k(); ++i) {
    out << ' ';
    put_double(out, model.weights()[i]);
  }
  out << '\n';
}

void write_model(std::ostream& out, const MNLModel& model) {
  out << "mnl v1\n";
  out << "u " << model.scores.size() << '\n';
  out << "scores";
  for (double s : model.scores) {
    out << ' ';
    put_double(out, s);
  }
  out << '\n';
}

void save_model(const AnyModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::kIo, "cannot write " + path);
  std::visit([&](const auto& m) { write_model(out, m); }, model);
  if (!out) throw Error(Errc::kIo, "write to " + path + " failed");
}

AnyModel read_model(std::istream& in) {
  std::string tag;
  if (!std::getline(in, tag)) throw Error(Errc::kMalformed, "empty model file");
  while (!tag.empty() && (tag.back() == '\r' || tag.back() == ' ')) tag.pop_back();
  Reader r(in);
  if (tag == "topkgmm v1") {
    const auto u = r.scalar<std::size_t>("u");
    const auto k = r.scalar<std::size_t>("k");
    if (u < 2 || k == 0 || k > u) throw Error(Errc::kMalformed, "inconsistent u and k");
    const std::vector<ItemId> center = r.list<ItemId>("center", k);
    const auto beta = r.scalar<double>("beta");
    const auto p = r.scalar<double>("p");
    const auto w0 = r.scalar<double>("w0");
    std::vector<double> w = r.list<double>("w", k);
    w.insert(w.begin(), w0);
    try {
      return TopKGMM(TopKList::make(center, Universe(u, true)), beta, p, std::move(w));
    } catch (const Error& e) {
      throw Error(Errc::kMalformed, e.what());
    }
  }
  if (tag == "mnl v1") {
    const auto u = r.scalar<std::size_t>("u");
    MNLModel model{r.list<double>("scores", u)};
    try {
      model.validate();
    } catch (const Error& e) {
      throw Error(Errc::kMalformed, e.what());
    }
    return model;
  }
  throw Error(Errc::kVersionMismatch, "unknown model tag '" + tag + "'");
}

AnyModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path);
  return read_model(in);
}

}  // namespace topk
