#pragma once

// Data interchange: literature and panel CSVs, JSON for parameters and fits,
// run manifests. Floating-point output always carries 15 significant digits.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "thurdle/boot.hpp"
#include "thurdle/error.hpp"
#include "thurdle/model.hpp"
#include "thurdle/qml.hpp"

namespace thurdle::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.3.0";

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// The value, or null when not finite.
inline json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

// ---------------------------------------------------------------------------
// CSV helpers

inline std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c); };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline bool is_missing(const std::string& s) {
  const auto l = lower(s);
  return l.empty() || l == "na" || l == "nan" || l == "null";
}

inline double parse_double(const std::string& s, std::size_t line, const std::string& column) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw data_error("cannot parse '" + s + "' in column " + column, line);
  }
}

namespace detail {
struct CsvTable {
  std::map<std::string, std::size_t> columns;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;  // (line, fields)
};

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_csv(line);
    if (!have_header) {
      for (std::size_t i = 0; i < fields.size(); ++i) t.columns[lower(fields[i])] = i;
      width = fields.size();
      have_header = true;
      continue;
    }
    if (fields.size() != width)
      throw data_error("expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()), lineno);
    t.rows.emplace_back(lineno, std::move(fields));
  }
  if (!have_header) throw data_error("empty CSV: a header row is required");
  return t;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Literature CSV: id,t,truth,published,mu. Only `t` is required on input.

inline void write_literature_csv(std::ostream& out, const Literature& lit) {
  out << "id,t,truth,published,mu\n";
  for (std::size_t i = 0; i < lit.records.size(); ++i) {
    const auto& r = lit.records[i];
    out << i + 1 << ',' << format_double(r.t) << ',';
    if (r.truth) out << (*r.truth == Truth::True ? 'T' : 'F');
    out << ',';
    if (r.published) out << (*r.published ? '1' : '0');
    out << ',';
    if (r.mu) out << format_double(*r.mu);
    out << '\n';
  }
}

inline std::optional<Truth> parse_truth(const std::string& s, std::size_t line) {
  if (is_missing(s)) return std::nullopt;
  const auto l = lower(s);
  if (l == "t" || l == "true" || l == "1") return Truth::True;
  if (l == "f" || l == "false" || l == "0") return Truth::False;
  throw data_error("truth must be T/F, true/false, or 1/0; got '" + s + "'", line);
}

inline std::optional<bool> parse_flag(const std::string& s, std::size_t line) {
  if (is_missing(s)) return std::nullopt;
  const auto l = lower(s);
  if (l == "1" || l == "true" || l == "t" || l == "yes") return true;
  if (l == "0" || l == "false" || l == "f" || l == "no") return false;
  throw data_error("published must be 1/0 or true/false; got '" + s + "'", line);
}

inline Literature read_literature_csv(std::istream& in, const std::string& source = "") {
  const auto tab = detail::read_csv(in);
  const auto col = [&](const char* name) -> std::optional<std::size_t> {
    auto it = tab.columns.find(name);
    if (it == tab.columns.end()) return std::nullopt;
    return it->second;
  };
  const auto ct = col("t");
  if (!ct) throw data_error("missing required column 't'", 1);
  const auto ctruth = col("truth"), cpub = col("published"), cmu = col("mu");
  Literature lit;
  lit.provenance = source;
  for (const auto& [line, f] : tab.rows) {
    FactorRecord r;
    if (is_missing(f[*ct])) throw data_error("missing t-stat", line);
    r.t = parse_double(f[*ct], line, "t");
    if (!std::isfinite(r.t)) throw data_error("t-stat must be finite", line);
    if (ctruth) r.truth = parse_truth(f[*ctruth], line);
    if (cpub) r.published = parse_flag(f[*cpub], line);
    if (cmu && !is_missing(f[*cmu])) r.mu = parse_double(f[*cmu], line, "mu");
    lit.records.push_back(r);
  }
  return lit;
}

inline Literature read_literature_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  return read_literature_csv(in, path);
}

// ---------------------------------------------------------------------------
// Panel CSV, long format: predictor,month,return.

inline PanelReturns read_panel_csv(std::istream& in) {
  const auto tab = detail::read_csv(in);
  if (tab.columns.size() != 3 || !tab.columns.count("predictor") || !tab.columns.count("month") ||
      !tab.columns.count("return"))
    throw data_error("panel CSV must be long format with exactly the columns predictor,month,return", 1);
  const std::size_t cp = tab.columns.at("predictor"), cm = tab.columns.at("month"), cr = tab.columns.at("return");
  std::map<std::string, std::size_t> pid, mid;
  for (const auto& [line, f] : tab.rows) {
    if (f[cp].empty() || f[cm].empty()) throw data_error("empty predictor or month", line);
    pid.emplace(f[cp], 0);
    mid.emplace(f[cm], 0);
  }
  PanelReturns p;
  for (auto& [k, v] : pid) v = p.predictors.size(), p.predictors.push_back(k);
  for (auto& [k, v] : mid) v = p.months.size(), p.months.push_back(k);
  p.returns.assign(p.predictors.size() * p.months.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> seen(p.returns.size(), false);
  for (const auto& [line, f] : tab.rows) {
    const std::size_t k = pid[f[cp]] * p.months.size() + mid[f[cm]];
    if (seen[k]) throw data_error("duplicate predictor/month pair", line);
    seen[k] = true;
    if (!is_missing(f[cr])) p.returns[k] = parse_double(f[cr], line, "return");
  }
  p.validate();
  return p;
}

inline PanelReturns read_panel_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  return read_panel_csv(in);
}

inline void write_panel_csv(std::ostream& out, const PanelReturns& p) {
  out << "predictor,month,return\n";
  for (std::size_t i = 0; i < p.n_predictors(); ++i)
    for (std::size_t m = 0; m < p.n_months(); ++m)
      if (!std::isnan(p.at(i, m))) out << p.predictors[i] << ',' << p.months[m] << ',' << format_double(p.at(i, m)) << '\n';
}

// ---------------------------------------------------------------------------
// JSON

inline json to_json(const LatentDistSpec& g) {
  if (auto* d = std::get_if<LogNormal>(&g)) return {{"family", "lognormal"}, {"lambda_mu", num(d->lambda_mu)}, {"lambda_sigma", num(d->lambda_sigma)}};
  if (auto* d = std::get_if<Exponential>(&g)) return {{"family", "exponential"}, {"mean", num(d->mean)}};
  if (auto* d = std::get_if<ScaledT>(&g)) return {{"family", "scaled_t"}, {"scale", num(d->scale)}, {"dof", num(d->dof)}};
  const auto& d = std::get<MixtureNormal>(g);
  return {{"family", "mixture_normal"}, {"w", num(d.w)}, {"m1", num(d.m1)}, {"s1", num(d.s1)}, {"m2", num(d.m2)}, {"s2", num(d.s2)}};
}

inline json to_json(const PubRule& r) {
  json j{{"family", r.family()}};
  if (auto* s = std::get_if<Staircase>(&r.shape)) {
    j["eta"] = num(s->eta);
    j["t_low"] = num(s->t_low);
    j["t_good"] = num(s->t_good);
  } else if (auto* s = std::get_if<ThreeStep>(&r.shape)) {
    j["eta_a"] = num(s->eta_a), j["eta_b"] = num(s->eta_b), j["eta_c"] = num(s->eta_c);
    j["t_a"] = num(s->t_a), j["t_b"] = num(s->t_b), j["t_good"] = num(s->t_good);
  } else if (auto* s = std::get_if<Logistic>(&r.shape)) {
    j["location"] = num(s->location), j["slope"] = num(s->slope), j["t_good"] = num(r.t_good());
  }
  j["s_bar"] = num(r.s_bar);
  return j;
}

inline json to_json(const ModelParams& p) {
  return {{"pi_f", num(p.pi_f)}, {"latent", to_json(p.latent)}, {"pub", to_json(p.pub)}};
}

namespace detail {
inline double get_num(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) throw data_error(std::string("JSON field '") + key + "' must be a number");
  return j[key].get<double>();
}
inline double get_num_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? get_num(j, key) : fallback;
}
}  // namespace detail

inline LatentDistSpec latent_from_json(const json& j) {
  using detail::get_num;
  const auto fam = j.value("family", std::string{});
  if (fam == "lognormal") return LogNormal{get_num(j, "lambda_mu"), get_num(j, "lambda_sigma")};
  if (fam == "exponential") return Exponential{get_num(j, "mean")};
  if (fam == "scaled_t") return ScaledT{get_num(j, "scale"), get_num(j, "dof")};
  if (fam == "mixture_normal")
    return MixtureNormal{get_num(j, "w"), get_num(j, "m1"), get_num(j, "s1"), get_num(j, "m2"), get_num(j, "s2")};
  throw data_error("unknown latent family '" + fam + "'");
}

inline PubRule pub_from_json(const json& j) {
  using detail::get_num;
  using detail::get_num_or;
  PubRule r;
  r.s_bar = get_num_or(j, "s_bar", 1.0);
  const auto fam = j.value("family", std::string{});
  if (fam == "staircase")
    r.shape = Staircase{get_num(j, "eta"), get_num_or(j, "t_low", 1.96), get_num_or(j, "t_good", 2.58)};
  else if (fam == "three_step")
    r.shape = ThreeStep{get_num(j, "eta_a"), get_num(j, "eta_b"), get_num(j, "eta_c"),
                        get_num_or(j, "t_a", 1.5), get_num_or(j, "t_b", 1.96), get_num_or(j, "t_good", 2.58)};
  else if (fam == "logistic")
    r.shape = Logistic{get_num(j, "location"), get_num(j, "slope")};
  else if (fam == "unselected")
    r.shape = Unselected{};
  else
    throw data_error("unknown publication rule family '" + fam + "'");
  return r;
}

/// Accepts either a ModelParams object or a fit result containing "theta_hat".
inline ModelParams params_from_json(const json& j0) {
  const json& j = j0.contains("theta_hat") ? j0["theta_hat"] : j0;
  if (!j.contains("latent") || !j.contains("pub")) throw data_error("parameter JSON needs 'pi_f', 'latent' and 'pub'");
  ModelParams p;
  p.pi_f = detail::get_num(j, "pi_f");
  p.latent = latent_from_json(j["latent"]);
  p.pub = pub_from_json(j["pub"]);
  try {
    p.validate();
  } catch (const domain_error& e) {
    throw data_error(std::string("invalid parameters: ") + e.what());
  }
  return p;
}

inline json to_json(const FitSpec& s) {
  json b = json::object();
  for (const auto& x : s.bounds) b[x.name] = {num(x.lo), num(x.hi)};
  return {{"name", s.name},
          {"bounds", b},
          {"inclusion_cutoff", num(s.inclusion_cutoff())},
          {"include_small_t", s.include_small_t},
          {"n_starts", s.n_starts},
          {"tol", num(s.tol)},
          {"max_iter", s.max_iter},
          {"seed", s.seed}};
}

inline json to_json(const FitResult& r) {
  json v = json::object();
  for (std::size_t i = 0; i < r.values.size(); ++i) v[r.spec.bounds[i].name] = num(r.values[i]);
  return {{"theta_hat", to_json(r.theta_hat)},
          {"parameters", v},
          {"e_mu_true", num(r.e_mu())},
          {"sd_mu_true", num(r.sd_mu())},
          {"loglik", num(r.loglik)},
          {"converged", r.converged},
          {"n_obs", r.n_obs},
          {"n_excluded", r.n_excluded},
          {"at_bound", r.at_bound},
          {"small_sample", r.small_sample},
          {"starts_converged", r.starts_converged},
          {"evaluations", r.evaluations},
          {"spec", to_json(r.spec)}};
}

inline json to_json(const HurdleResult& h) {
  return {{"alpha", num(h.alpha)},
          {"hurdle", h.feasible ? num(h.hurdle) : json(nullptr)},
          {"achieved_fdr", num(h.achieved_fdr)},
          {"method", method_name(h.method)},
          {"feasible", h.feasible},
          {"non_monotone", h.non_monotone}};
}

inline json to_json(const Summary& s) {
  json rows = json::array();
  for (const auto& r : s.rows) {
    json v = json::array();
    for (double x : r.values) v.push_back(num(x));
    rows.push_back({{"stat", r.stat}, {"n", r.n}, {"values", v}});
  }
  json pct = json::array();
  for (double p : s.percentiles) pct.push_back(num(p));
  return {{"percentiles", pct}, {"n_used", s.n_used}, {"n_failed", s.n_failed}, {"rows", rows}};
}

inline void write_boot_reps_csv(std::ostream& out, const BootResult& b) {
  out << "rep,pi_f,e_mu,sd_mu,eta,hurdle5,hurdle1,shrink_pub,fdr_pub,converged\n";
  for (const auto& r : b.reps)
    out << r.rep + 1 << ',' << format_double(r.pi_f) << ',' << format_double(r.e_mu) << ',' << format_double(r.sd_mu)
        << ',' << format_double(r.eta) << ',' << format_double(r.hurdle5) << ',' << format_double(r.hurdle1) << ','
        << format_double(r.shrink_pub) << ',' << format_double(r.fdr_pub) << ',' << (r.converged ? 1 : 0) << '\n';
}

inline void write_summary_csv(std::ostream& out, const Summary& s) {
  out << "stat,n";
  for (double p : s.percentiles) out << ",p" << format_double(p);
  out << '\n';
  for (const auto& r : s.rows) {
    out << r.stat << ',' << r.n;
    for (double v : r.values) out << ',' << format_double(v);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Manifests

/// 64-bit FNV-1a digest of a byte string, as 16 hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct RunManifest {
  std::string command;
  json config = json::object();
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
  std::vector<std::string> outputs;
  std::chrono::system_clock::time_point started = std::chrono::system_clock::now();

  void add_input(const std::string& path) { inputs.emplace_back(path, fnv1a_hex(read_file(path))); }

  json to_json() const {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(started);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
    json in = json::array();
    for (const auto& [p, d] : inputs) in.push_back({{"path", p}, {"fnv1a64", d}});
    return {{"command", command},
            {"tool_version", kToolVersion},
            {"seed", seed},
            {"config", config},
            {"inputs", in},
            {"outputs", outputs},
            {"started_utc", stamp},
            {"wall_seconds", num(std::chrono::duration<double>(now - started).count())}};
  }
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  out << text;
  if (!out) throw data_error("write failed for " + path);
}

inline void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace thurdle::io
