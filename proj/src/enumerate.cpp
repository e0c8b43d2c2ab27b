#include <cmath>
#include <limits>

#include "rpz/compile.hpp"
#include "rpz/error.hpp"
#include "rpz/inference.hpp"

namespace rpz {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Replays a choice trace and extends it with first choices at new sites.
class EnumEffects : public Effects {
 public:
  std::vector<std::size_t> trace;
  std::vector<std::size_t> arity;
  std::size_t pos = 0;
  double log_weight = 0.0;

  Value sample(const Value& dist) override {
    if (dist.is_nil()) return Value::nil();
    std::vector<std::pair<Value, double>> items;
    if (!finite_support(*dist.as_dist(), items))
      throw Error(ErrorKind::Eval, "enumeration reached a sample site without finite support: " + describe(*dist.as_dist()));
    if (pos == trace.size()) {
      trace.push_back(0);
      arity.push_back(items.size());
    } else if (arity[pos] != items.size()) {
      throw Error(ErrorKind::Eval, "enumeration: support size changed on replay");
    }
    const auto& [v, p] = items[trace[pos++]];
    log_weight += p > 0.0 ? std::log(p) : kNegInf;
    return v;
  }

  void observe(const Value& dist, const Value& v) override {
    if (dist.is_nil() || v.is_nil()) return;
    log_weight += log_pdf(*dist.as_dist(), v);
  }

  void factor(const Value& w) override {
    if (!w.is_nil()) log_weight += w.as_float();
  }

  // Moves to the next trace in lexicographic order; false when exhausted.
  bool advance() {
    while (!trace.empty() && trace.back() + 1 == arity.back()) {
      trace.pop_back();
      arity.pop_back();
    }
    if (trace.empty()) return false;
    ++trace.back();
    return true;
  }
};

struct Path {
  Value state;
  double log_weight;
};

}  // namespace

std::vector<DistPtr> exhaustive_enum(const CompiledProgram& prog, const std::string& model,
                                     const std::vector<Value>& inputs, std::size_t path_budget) {
  int idx = prog.index(model);
  if (idx < 0) throw Error(ErrorKind::Name, "no declaration named " + model);
  std::vector<Path> frontier{Path{copy_cells(prog.decls[static_cast<std::size_t>(idx)].init), 0.0}};
  std::vector<DistPtr> out;
  for (const Value& input : inputs) {
    std::vector<Path> next;
    std::vector<std::pair<Value, double>> results;
    for (const Path& p : frontier) {
      EnumEffects fx;
      do {
        fx.pos = 0;
        fx.log_weight = 0.0;
        Value st = copy_cells(p.state);
        Value r = step_node(prog, idx, st, input, fx);
        if (fx.pos != fx.trace.size()) throw Error(ErrorKind::Eval, "enumeration: trace length changed on replay");
        double lw = p.log_weight + fx.log_weight;
        if (lw != kNegInf) {
          results.emplace_back(r, lw);
          next.push_back(Path{st, lw});
          if (next.size() > path_budget)
            throw Error(ErrorKind::Budget, "enumeration exceeded " + std::to_string(path_budget) + " paths");
        }
      } while (fx.advance());
    }
    if (results.empty()) throw Error(ErrorKind::Degenerate, "every execution path has zero weight");
    std::vector<double> lw;
    for (const auto& r : results) lw.push_back(r.second);
    double z = log_sum_exp(lw);
    for (auto& r : results) r.second = std::exp(r.second - z);
    DistPtr d = make_categorical(std::move(results));
    std::vector<std::pair<Value, double>> sup;
    finite_support(*d, sup);
    out.push_back(sup.size() == 1 ? make_dirac(sup[0].first) : d);
    frontier = std::move(next);
  }
  return out;
}

}  // namespace rpz
