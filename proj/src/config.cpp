#include "homog/config.hpp"

#include "homog/errors.hpp"
#include "homog/problems.hpp"

#include <toml.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace homog::config {

namespace {

void check_keys(const toml::table& t, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : t) {
    const std::string key(k.str());
    if (!allowed.count(key)) throw UsageError("config: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get(const toml::table& t, const char* key, T fallback) {
  const toml::node* n = t.get(key);
  if (!n) return fallback;
  if constexpr (std::is_same_v<T, double>) {
    if (auto v = n->value<double>()) return *v;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (auto v = n->value<bool>()) return *v;
  } else if constexpr (std::is_integral_v<T>) {
    if (auto v = n->value<std::int64_t>()) return static_cast<T>(*v);
  } else {
    if (auto v = n->value<std::string>()) return *v;
  }
  throw UsageError(std::string("config: key '") + key + "' has the wrong type");
}

template <typename T>
std::vector<T> get_list(const toml::table& t, const char* key, std::vector<T> fallback) {
  const toml::node* n = t.get(key);
  if (!n) return fallback;
  const toml::array* arr = n->as_array();
  if (!arr) throw UsageError(std::string("config: key '") + key + "' must be an array");
  std::vector<T> out;
  for (const toml::node& e : *arr) {
    std::optional<T> v;
    if constexpr (std::is_same_v<T, double>)
      v = e.value<double>();
    else if constexpr (std::is_integral_v<T>) {
      if (auto i = e.value<std::int64_t>()) v = static_cast<T>(*i);
    } else
      v = e.value<std::string>();
    if (!v) throw UsageError(std::string("config: array '") + key + "' has an entry of the wrong type");
    out.push_back(*v);
  }
  return out;
}

const toml::table* subtable(const toml::table& t, const char* key) {
  const toml::node* n = t.get(key);
  if (!n) return nullptr;
  const toml::table* s = n->as_table();
  if (!s) throw UsageError(std::string("config: '") + key + "' must be a table");
  return s;
}

}  // namespace

void RunConfig::validate() const {
  if (!(dt > 0.0) || !(T > 0.0)) throw UsageError("dt and T must be positive");
  if (replicas < 1) throw UsageError("replicas must be >= 1");
  for (int d : degrees)
    if (d < 0) throw UsageError("degrees must be nonnegative");
  if (d_ref && !degrees.empty() && *d_ref <= *std::max_element(degrees.begin(), degrees.end()))
    throw UsageError("d_ref must exceed every degree in the list");
  if (lambda && !(*lambda > 0.0)) throw UsageError("lambda must be positive");
  if (eps && !(*eps > 0.0)) throw UsageError("eps must be positive");
  if (oracle_cells < 4) throw UsageError("oracle cells must be >= 4");
  if (!oracle_box.empty() && (oracle_box.size() != 2 || !(oracle_box[1] > oracle_box[0])))
    throw UsageError("oracle box must be [lo, hi] with lo < hi");
  if (threads < 0) throw UsageError("threads must be >= 0");
  for (int p : p_list)
    if (p < 1 || p > 8) throw UsageError("HMM p values must be in [1, 8]");
}

RunConfig parse_toml(const std::string& text) {
  toml::table t;
  try {
    t = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config: " << e.description() << " at line " << e.source().begin.line;
    throw UsageError(msg.str());
  }
  check_keys(t, "top level",
             {"problem", "lambda", "eps", "seed", "degrees", "d_ref", "x", "out", "threads", "integrator",
              "quadrature", "hmm", "spde", "oracle", "inline"});
  RunConfig c;
  c.problem = get<std::string>(t, "problem", c.problem);
  if (t.get("lambda")) c.lambda = get<double>(t, "lambda", 0.0);
  if (t.get("eps")) c.eps = get<double>(t, "eps", 0.0);
  c.seed = get<std::uint64_t>(t, "seed", c.seed);
  c.degrees = get_list<int>(t, "degrees", c.degrees);
  if (t.get("d_ref")) c.d_ref = get<int>(t, "d_ref", 0);
  c.x = get_list<double>(t, "x", c.x);
  c.out = get<std::string>(t, "out", c.out);
  c.threads = get<int>(t, "threads", c.threads);
  if (const toml::table* s = subtable(t, "integrator")) {
    check_keys(*s, "[integrator]", {"dt", "T", "replicas", "seed"});
    c.dt = get<double>(*s, "dt", c.dt);
    c.T = get<double>(*s, "T", c.T);
    c.replicas = get<int>(*s, "replicas", c.replicas);
    c.seed = get<std::uint64_t>(*s, "seed", c.seed);
  }
  if (const toml::table* s = subtable(t, "quadrature")) {
    check_keys(*s, "[quadrature]", {"nodes", "fit_nodes"});
    c.nodes = get<int>(*s, "nodes", c.nodes);
    c.fit_nodes = get<int>(*s, "fit_nodes", c.fit_nodes);
  }
  if (const toml::table* s = subtable(t, "hmm")) {
    check_keys(*s, "[hmm]", {"p"});
    c.p_list = get_list<int>(*s, "p", c.p_list);
  }
  if (const toml::table* s = subtable(t, "spde")) {
    check_keys(*s, "[spde]", {"modes", "q", "grid", "b_term", "degree"});
    c.spde_modes = get<int>(*s, "modes", c.spde_modes);
    c.spde_q = get_list<double>(*s, "q", c.spde_q);
    c.spde_grid = get<int>(*s, "grid", c.spde_grid);
    c.spde_b_term = get<bool>(*s, "b_term", c.spde_b_term);
    c.spde_degree = get<int>(*s, "degree", c.spde_degree);
  }
  if (const toml::table* s = subtable(t, "oracle")) {
    check_keys(*s, "[oracle]", {"cells", "width", "box"});
    c.oracle_cells = get<int>(*s, "cells", c.oracle_cells);
    c.oracle_width = get<double>(*s, "width", c.oracle_width);
    c.oracle_box = get_list<double>(*s, "box", c.oracle_box);
  }
  if (const toml::table* s = subtable(t, "inline")) {
    check_keys(*s, "[inline]", {"name", "m", "n", "V", "f", "alpha"});
    InlineProblem p;
    p.name = get<std::string>(*s, "name", p.name);
    p.m = get<int>(*s, "m", p.m);
    p.n = get<int>(*s, "n", p.n);
    p.V = get<std::string>(*s, "V", p.V);
    p.f = get_list<std::string>(*s, "f", p.f);
    if (const toml::node* a = s->get("alpha")) {
      const toml::array* rows = a->as_array();
      if (!rows) throw UsageError("config: inline alpha must be an array of arrays");
      for (const toml::node& r : *rows) {
        const toml::array* row = r.as_array();
        if (!row) throw UsageError("config: inline alpha must be an array of arrays");
        std::vector<std::string> out;
        for (const toml::node& e : *row) {
          auto v = e.value<std::string>();
          if (!v) throw UsageError("config: inline alpha entries must be strings");
          out.push_back(*v);
        }
        p.alpha.push_back(std::move(out));
      }
    }
    if (p.V.empty()) throw UsageError("config: inline problem needs V");
    c.inline_problem = std::move(p);
  }
  c.validate();
  return c;
}

RunConfig load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_toml(ss.str());
}

FastSlowProblem resolve_problem(const RunConfig& cfg) {
  FastSlowProblem p;
  if (cfg.inline_problem) {
    const InlineProblem& ip = *cfg.inline_problem;
    p = problems::from_strings(ip.name, ip.m, ip.n, ip.V, ip.f, ip.alpha, cfg.lambda.value_or(1.0));
  } else {
    p = problems::make(cfg.problem);
  }
  if (cfg.lambda) p.lambda = *cfg.lambda;
  if (cfg.eps) p.eps = *cfg.eps;
  if (cfg.d_ref) p.d_ref = *cfg.d_ref;
  if (!cfg.x.empty()) {
    if (static_cast<int>(cfg.x.size()) != p.m) throw UsageError("x must have one entry per slow variable");
    p.x0 = cfg.x;
  }
  p.validate();
  return p;
}

spde::SpdeConfig resolve_spde(const RunConfig& cfg) {
  spde::SpdeConfig s;
  s.modes = cfg.spde_modes;
  s.q = cfg.spde_q;
  s.grid = cfg.spde_grid;
  s.include_b_term = cfg.spde_b_term;
  if (cfg.eps) s.eps = *cfg.eps;
  if (!cfg.x.empty()) s.x0 = cfg.x;
  if (s.q.empty()) s.q.assign(static_cast<std::size_t>(s.modes), 1.0);
  return s;
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["problem"] = c.problem;
  if (c.inline_problem) {
    const InlineProblem& p = *c.inline_problem;
    j["inline"] = {{"name", p.name}, {"m", p.m}, {"n", p.n}, {"V", p.V}, {"f", p.f}, {"alpha", p.alpha}};
  }
  j["lambda"] = c.lambda ? nlohmann::json(*c.lambda) : nlohmann::json(nullptr);
  j["eps"] = c.eps ? nlohmann::json(*c.eps) : nlohmann::json(nullptr);
  j["integrator"] = {{"dt", c.dt}, {"T", c.T}, {"replicas", c.replicas}, {"seed", c.seed}};
  j["degrees"] = c.degrees;
  j["d_ref"] = c.d_ref ? nlohmann::json(*c.d_ref) : nlohmann::json(nullptr);
  j["x"] = c.x;
  j["quadrature"] = {{"nodes", c.nodes}, {"fit_nodes", c.fit_nodes}};
  j["hmm"] = {{"p", c.p_list}};
  const spde::SpdeConfig s = resolve_spde(c);
  j["spde"] = {{"modes", s.modes}, {"q", s.q},           {"grid", c.spde_grid},
               {"b_term", c.spde_b_term}, {"degree", c.spde_degree}};
  j["oracle"] = {{"cells", c.oracle_cells}, {"width", c.oracle_width}, {"box", c.oracle_box}};
  j["threads"] = c.threads;
  return j;
}

}  // namespace homog::config
