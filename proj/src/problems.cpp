#include "homog/problems.hpp"

#include "homog/errors.hpp"

#include <map>

namespace homog {

void FastSlowProblem::validate() const {
  if (m < 1 || n < 1) throw UsageError("problem '" + name + "': need m >= 1 and n >= 1");
  if (static_cast<int>(f.size()) != m) throw UsageError("problem '" + name + "': f must have m entries");
  if (V.fast_dim() != n) throw UsageError("problem '" + name + "': V has the wrong fast dimension");
  for (const auto& fi : f)
    if (fi.fast_dim() > n || fi.slow_dim() > m) throw UsageError("problem '" + name + "': f has wrong dimensions");
  if (!alpha.empty()) {
    if (static_cast<int>(alpha.size()) != m) throw UsageError("problem '" + name + "': alpha must have m rows");
    for (const auto& row : alpha)
      if (static_cast<int>(row.size()) != p) throw UsageError("problem '" + name + "': alpha rows must have p entries");
  }
  if (!(lambda > 0.0)) throw UsageError("problem '" + name + "': lambda must be positive");
  if (!x0.empty() && static_cast<int>(x0.size()) != m) throw UsageError("problem '" + name + "': x0 has wrong length");
}

namespace problems {

namespace {

struct Entry {
  std::string description;
  int m;
  int n;
  std::string V;
  std::vector<std::string> g;  // f = -L g
  double lambda;
  int d_ref;
};

const std::map<std::string, Entry>& registry() {
  static const std::map<std::string, Entry> entries = {
      {"ou",
       {"1D Ornstein-Uhlenbeck fast process, f = sin(x0) y0 (exact at every degree)", 1, 1,
        "y0^2/2 + 0.91893853320467274", {"sin(x0)*y0"}, 1.0, 10}},
      {"single_well_2d",
       {"2D single-well potential y0^2 + y1^2 + (y0^2 + y1^2)^2/2", 2, 2, "y0^2 + y1^2 + 0.5*(y0^2 + y1^2)^2",
        {"cos(x0 + y0 + y1)", "sin(x1)*sin(y0 + y1)"}, 0.5, 30}},
      {"single_well_3d",
       {"3D quartic well y0^4 + 2 y1^4 + 3 y2^4", 2, 3, "y0^4 + 2*y1^4 + 3*y2^4",
        {"cos(x0 + y0 + y1)", "sin(x1)*sin(y0 + y1 + 2*y2)"}, 0.5, 12}},
      {"bistable", {"1D double well y^4/4 - y^2/2", 1, 1, "y0^4/4 - y0^2/2", {"x0*sin(y0)"}, 0.5, 40}},
      {"tilted_bistable",
       {"1D tilted double well y^4/4 - y^2/2 + 10 y", 1, 1, "y0^4/4 - y0^2/2 + 10*y0", {"x0*sin(y0) + y0^2"}, 1.0,
        40}},
      {"three_well",
       {"2D potential with three wells at the cube roots of unity", 2, 2,
        "((y0 - 1)^2 + y1^2)*((y0 + 0.5)^2 + (y1 - sqrt3/2)^2)*((y0 + 0.5)^2 + (y1 + sqrt3/2)^2)",
        {"cos(x0 + y0 + y1)", "sin(x1)*sin(y0 + y1)"}, 0.35, 36}},
  };
  return entries;
}

}  // namespace

std::vector<std::string> names() {
  std::vector<std::string> out;
  for (const auto& [name, e] : registry()) out.push_back(name);
  out.push_back("spde");
  return out;
}

std::string describe(const std::string& name) {
  if (name == "spde") return "Galerkin reduction of a periodic SPDE with nonlinearity u^2 (u^2)_x";
  auto it = registry().find(name);
  if (it == registry().end()) throw UsageError("unknown problem '" + name + "'");
  return it->second.description;
}

std::vector<expr::Expression> centred_drifts(const expr::Expression& V, const std::vector<expr::Expression>& g) {
  std::vector<expr::Expression> f;
  for (const auto& gi : g) f.push_back(-expr::apply_generator(V, gi));
  return f;
}

FastSlowProblem make(const std::string& name) {
  if (name == "spde") throw UsageError("problem 'spde' is not a gradient problem; use the spde subcommand");
  auto it = registry().find(name);
  if (it == registry().end()) throw UsageError("unknown problem '" + name + "'");
  const Entry& e = it->second;
  FastSlowProblem p;
  p.name = name;
  p.m = e.m;
  p.n = e.n;
  p.p = 0;
  p.V = expr::parse(e.V, e.m, e.n);
  std::vector<expr::Expression> g;
  for (const auto& s : e.g) g.push_back(expr::parse(s, e.m, e.n));
  if (name == "ou") {
    p.f = g;  // -L[y0] = y0, so f = sin(x0) y0 already has the centred form
  } else {
    p.f = centred_drifts(p.V, g);
  }
  p.lambda = e.lambda;
  p.d_ref = e.d_ref;
  p.x0.assign(static_cast<std::size_t>(e.m), 1.2);
  p.validate();
  return p;
}

FastSlowProblem from_strings(const std::string& name, int m, int n, const std::string& V,
                             const std::vector<std::string>& f, const std::vector<std::vector<std::string>>& alpha,
                             double lambda) {
  FastSlowProblem p;
  p.name = name;
  p.m = m;
  p.n = n;
  p.V = expr::parse(V, m, n);
  for (const auto& s : f) p.f.push_back(expr::parse(s, m, n));
  p.p = alpha.empty() ? 0 : static_cast<int>(alpha[0].size());
  for (const auto& row : alpha) {
    std::vector<expr::Expression> r;
    for (const auto& s : row) r.push_back(expr::parse(s, m, n));
    p.alpha.push_back(std::move(r));
  }
  p.lambda = lambda;
  p.d_ref = n == 1 ? 40 : (n == 2 ? 30 : 12);
  p.x0.assign(static_cast<std::size_t>(m), 1.2);
  p.validate();
  return p;
}

}  // namespace problems
}  // namespace homog
