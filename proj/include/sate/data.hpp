#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sate/math.hpp"

namespace sate {

// one unit: covariates, binary treatment, surrogates, labelling indicator,
// and the primary outcome which exists only when r == 1
struct Observation {
  std::vector<double> x;
  int t = 0;
  std::vector<double> s;
  int r = 0;
  std::optional<double> y;
};

struct SplitCounts {
  long n = 0;
  long n_l = 0;
  long n_u = 0;
};

struct Dataset {
  std::vector<Observation> obs;
  int d_x = 0;
  int d_s = 0;

  long n() const { return static_cast<long>(obs.size()); }

  long n_labelled() const {
    long c = 0;
    for (const auto& o : obs) c += o.r;
    return c;
  }

  SplitCounts split_counts() const {
    SplitCounts sc;
    sc.n = n();
    sc.n_l = n_labelled();
    sc.n_u = sc.n - sc.n_l;
    return sc;
  }

  // structural invariants; parsers and generators funnel through here
  void validate() const {
    if (d_x < 0 || d_s < 0) throw ValidationError("dataset: negative dimension");
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const auto& o = obs[i];
      std::string at = " at row " + std::to_string(i);
      if (static_cast<int>(o.x.size()) != d_x) throw ValidationError("dataset: x dimension mismatch" + at);
      if (static_cast<int>(o.s.size()) != d_s) throw ValidationError("dataset: s dimension mismatch" + at);
      if (o.t != 0 && o.t != 1) throw ValidationError("dataset: t must be 0 or 1" + at);
      if (o.r != 0 && o.r != 1) throw ValidationError("dataset: r must be 0 or 1" + at);
      if (o.r == 1 && !o.y.has_value()) throw ValidationError("dataset: labelled row missing y" + at);
      if (o.r == 0 && o.y.has_value()) throw ValidationError("dataset: unlabelled row carries y" + at);
      for (double v : o.x)
        if (!std::isfinite(v)) throw ValidationError("dataset: non-finite x" + at);
      for (double v : o.s)
        if (!std::isfinite(v)) throw ValidationError("dataset: non-finite s" + at);
      if (o.y && !std::isfinite(*o.y)) throw ValidationError("dataset: non-finite y" + at);
    }
  }
};

// ---- text formats ----
// csv header: x1..xdx,t,s1..sds,r,y ; y is the empty field when r = 0.
// 17 significant digits round-trip doubles bit for bit.

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string dataset_csv_header(int d_x, int d_s) {
  std::string h;
  for (int j = 0; j < d_x; ++j) h += "x" + std::to_string(j + 1) + ",";
  h += "t,";
  for (int j = 0; j < d_s; ++j) h += "s" + std::to_string(j + 1) + ",";
  h += "r,y";
  return h;
}

inline void write_dataset_csv(const Dataset& data, std::ostream& out) {
  data.validate();
  out << dataset_csv_header(data.d_x, data.d_s) << "\n";
  for (const auto& o : data.obs) {
    for (double v : o.x) out << format_double(v) << ",";
    out << o.t << ",";
    for (double v : o.s) out << format_double(v) << ",";
    out << o.r << ",";
    if (o.y) out << format_double(*o.y);
    out << "\n";
  }
}

inline void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  write_dataset_csv(data, out);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline double parse_double_strict(const std::string& s, const char* what, std::size_t row) {
  if (s.empty()) throw ValidationError(std::string("csv: empty ") + what + " field at row " + std::to_string(row));
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size())
    throw ValidationError(std::string("csv: malformed ") + what + " field at row " + std::to_string(row));
  return v;
}

inline int parse_binary_strict(const std::string& s, const char* what, std::size_t row) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw ValidationError(std::string("csv: ") + what + " must be 0 or 1 at row " + std::to_string(row));
}

}  // namespace detail

inline Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = detail::split_csv_line(line);
  int d_x = 0, d_s = 0;
  std::size_t pos = 0;
  while (pos < header.size() && header[pos] == "x" + std::to_string(d_x + 1)) {
    ++d_x;
    ++pos;
  }
  if (pos >= header.size() || header[pos] != "t") throw ValidationError("csv: bad header, expected t column");
  ++pos;
  while (pos < header.size() && header[pos] == "s" + std::to_string(d_s + 1)) {
    ++d_s;
    ++pos;
  }
  if (pos + 2 != header.size() || header[pos] != "r" || header[pos + 1] != "y")
    throw ValidationError("csv: bad header, expected r,y tail");

  Dataset data;
  data.d_x = d_x;
  data.d_s = d_s;
  std::size_t row = 0;
  const std::size_t n_fields = static_cast<std::size_t>(d_x + d_s) + 3;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    auto f = detail::split_csv_line(line);
    if (f.size() != n_fields)
      throw ValidationError("csv: wrong field count at row " + std::to_string(row));
    Observation o;
    std::size_t i = 0;
    for (int j = 0; j < d_x; ++j) o.x.push_back(detail::parse_double_strict(f[i++], "x", row));
    o.t = detail::parse_binary_strict(f[i++], "t", row);
    for (int j = 0; j < d_s; ++j) o.s.push_back(detail::parse_double_strict(f[i++], "s", row));
    o.r = detail::parse_binary_strict(f[i++], "r", row);
    const std::string& yf = f[i];
    if (o.r == 1) {
      o.y = detail::parse_double_strict(yf, "y", row);
    } else if (!yf.empty()) {
      throw ValidationError("csv: unlabelled row carries y at row " + std::to_string(row));
    }
    data.obs.push_back(std::move(o));
  }
  data.validate();
  return data;
}

inline Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open for reading: " + path);
  return read_dataset_csv(in);
}

// json-lines variant: one object per line, y explicitly null when missing
inline void write_dataset_jsonl(const Dataset& data, std::ostream& out) {
  data.validate();
  for (const auto& o : data.obs) {
    nlohmann::json j;
    j["x"] = o.x;
    j["t"] = o.t;
    j["s"] = o.s;
    j["r"] = o.r;
    if (o.y)
      j["y"] = *o.y;
    else
      j["y"] = nullptr;
    out << j.dump() << "\n";
  }
}

inline void write_dataset_jsonl(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  write_dataset_jsonl(data, out);
}

inline Dataset read_dataset_jsonl(std::istream& in) {
  Dataset data;
  std::string line;
  std::size_t row = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("jsonl: parse failure at row " + std::to_string(row) + ": " + e.what());
    }
    Observation o;
    try {
      o.x = j.at("x").get<std::vector<double>>();
      o.t = j.at("t").get<int>();
      o.s = j.at("s").get<std::vector<double>>();
      o.r = j.at("r").get<int>();
      if (!j.at("y").is_null()) o.y = j.at("y").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("jsonl: bad record at row " + std::to_string(row) + ": " + e.what());
    }
    if (first) {
      data.d_x = static_cast<int>(o.x.size());
      data.d_s = static_cast<int>(o.s.size());
      first = false;
    }
    data.obs.push_back(std::move(o));
  }
  data.validate();
  return data;
}

inline Dataset read_dataset_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open for reading: " + path);
  return read_dataset_jsonl(in);
}

// ---- folds ----
// fold ids drawn uniformly per unit, then rebalanced to near-equal sizes,
// separately within labelled and unlabelled strata; deterministic in the seed

struct FoldAssignment {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<int> fold_of;

  std::vector<long> sizes() const {
    std::vector<long> c(k, 0);
    for (int f : fold_of) ++c[f];
    return c;
  }

  std::vector<long> labelled_sizes(const Dataset& data) const {
    std::vector<long> c(k, 0);
    for (std::size_t i = 0; i < fold_of.size(); ++i)
      if (data.obs[i].r == 1) ++c[fold_of[i]];
    return c;
  }
};

namespace detail {

// rebalance one stratum in place: sizes end up within one of each other
inline void assign_stratum_folds(const std::vector<std::size_t>& idx, int k, Rng& rng,
                                 std::vector<int>& fold_of) {
  const std::size_t m = idx.size();
  std::vector<int> draw(m);
  std::vector<long> count(k, 0);
  for (std::size_t i = 0; i < m; ++i) {
    draw[i] = static_cast<int>(rng.uniform() * k);
    if (draw[i] >= k) draw[i] = k - 1;
    ++count[draw[i]];
  }
  const long base = static_cast<long>(m) / k;
  const int rem = static_cast<int>(m % static_cast<std::size_t>(k));
  // the rem fullest folds keep one extra unit; ties break on fold id
  std::vector<int> order(k);
  for (int f = 0; f < k; ++f) order[f] = f;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return count[a] > count[b]; });
  std::vector<long> target(k, base);
  for (int j = 0; j < rem; ++j) target[order[j]] = base + 1;
  std::vector<long> current = count;
  std::vector<std::size_t> overflow;
  for (std::size_t i = 0; i < m; ++i) {
    int f = draw[i];
    if (current[f] > target[f]) {
      --current[f];
      overflow.push_back(i);
      draw[i] = -1;
    }
  }
  int fill = 0;
  for (std::size_t i : overflow) {
    while (current[fill] >= target[fill]) ++fill;
    draw[i] = fill;
    ++current[fill];
  }
  for (std::size_t i = 0; i < m; ++i) fold_of[idx[i]] = draw[i];
}

}  // namespace detail

inline FoldAssignment make_folds(const Dataset& data, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("make_folds: k must be at least 2");
  const long n_l = data.n_labelled();
  if (n_l < k) throw ValidationError("make_folds: need at least k labelled units");
  FoldAssignment fa;
  fa.k = k;
  fa.seed = seed;
  fa.fold_of.assign(data.obs.size(), 0);
  std::vector<std::size_t> lab, unlab;
  for (std::size_t i = 0; i < data.obs.size(); ++i)
    (data.obs[i].r == 1 ? lab : unlab).push_back(i);
  Rng rng(derive_seed(seed, 0x666f6c64ULL));
  detail::assign_stratum_folds(lab, k, rng, fa.fold_of);
  if (!unlab.empty()) detail::assign_stratum_folds(unlab, k, rng, fa.fold_of);
  return fa;
}

// ---- estimate report ----

enum class Scale { SqrtN, SqrtNl };

inline std::string to_string(Scale s) { return s == Scale::SqrtN ? "SqrtN" : "SqrtNl"; }

inline Scale scale_from_string(const std::string& s) {
  if (s == "SqrtN") return Scale::SqrtN;
  if (s == "SqrtNl") return Scale::SqrtNl;
  throw ValidationError("unknown scale: " + s);
}

// point estimate with its normalized variance and confidence interval;
// scale records whether variance_hat tracks sqrt(n) or sqrt(n_l) asymptotics
struct EstimateReport {
  std::string estimator;
  double delta_hat = 0.0;
  double variance_hat = 0.0;
  Scale scale = Scale::SqrtN;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double alpha = 0.05;
  long n = 0;
  long n_l = 0;
  // per-unit influence evaluations backing variance_hat; kept out of JSON
  std::vector<double> influence_values;

  long n_eff() const { return scale == Scale::SqrtN ? n : n_l; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["estimator"] = estimator;
    j["delta_hat"] = delta_hat;
    j["variance_hat"] = variance_hat;
    j["scale"] = to_string(scale);
    j["ci"] = {ci_lo, ci_hi};
    j["alpha"] = alpha;
    j["n"] = n;
    j["n_l"] = n_l;
    return j;
  }

  static EstimateReport from_json(const nlohmann::json& j) {
    EstimateReport r;
    r.estimator = j.at("estimator").get<std::string>();
    r.delta_hat = j.at("delta_hat").get<double>();
    r.variance_hat = j.at("variance_hat").get<double>();
    r.scale = scale_from_string(j.at("scale").get<std::string>());
    r.ci_lo = j.at("ci").at(0).get<double>();
    r.ci_hi = j.at("ci").at(1).get<double>();
    r.alpha = j.at("alpha").get<double>();
    r.n = j.at("n").get<long>();
    r.n_l = j.at("n_l").get<long>();
    return r;
  }
};

}  // namespace sate
