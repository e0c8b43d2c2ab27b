#include "rpz/interp.hpp"

#include "rpz/ops.hpp"

namespace rpz {

namespace {

using T = KernelExpr::Tag;
using Gamma = std::vector<std::pair<std::string, Value>>;

const Value& look(const Gamma& g, const std::string& n) {
  for (auto it = g.rbegin(); it != g.rend(); ++it)
    if (it->first == n) return it->second;
  throw Error(ErrorKind::Eval, "unbound variable " + n);
}

void bind_names(const Pattern& p, const Value& v, Gamma& g) {
  switch (p.tag) {
    case Pattern::Tag::Name: g.push_back({p.name, v}); return;
    case Pattern::Tag::Wild:
    case Pattern::Tag::Unit: return;
    case Pattern::Tag::Tuple:
      for (std::size_t i = 0; i < p.items.size(); ++i) bind_names(p.items[i], v.is_nil() ? v : v.at(i), g);
      return;
  }
}

class Machine {
 public:
  explicit Machine(const KernelProgram& p) : prog_(p) {}

  const Decl& decl(const std::string& n) const {
    const Decl* d = prog_.find(n);
    if (!d) throw Error(ErrorKind::Name, "no declaration named " + n);
    return *d;
  }

  // Initial state.
  Value init(const KernelExpr& e) const {
    switch (e.tag) {
      case T::Const:
      case T::Var:
      case T::Last: return Value::unit();
      case T::Pair: {
        Tuple s;
        for (const auto& k : e.kids) s.push_back(init(*k));
        return Value::tuple(std::move(s));
      }
      case T::OpApp: return init(*e.kids[0]);
      case T::Call: return Value::tuple({init(*decl(e.name).body), init(*e.kids[0])});
      case T::WhereRec: {
        Tuple m, s;
        for (const auto& i : e.inits) m.push_back(i.value->literal);
        for (const auto& q : e.eqs) s.push_back(init(*q.rhs));
        return Value::tuple({Value::tuple(std::move(m)), Value::tuple(std::move(s)), init(*e.kids[0])});
      }
      case T::Present: return Value::tuple({init(*e.kids[0]), init(*e.kids[1]), init(*e.kids[2])});
      case T::Reset: return Value::tuple({init(*e.kids[0]), init(*e.kids[0]), init(*e.kids[1])});
      default: throw Error(ErrorKind::Eval, "reference interpreter: construct outside the deterministic kernel");
    }
  }

  // Transition: returns (value, state').
  std::pair<Value, Value> step(const KernelExpr& e, Gamma& g, const Value& s) const {
    switch (e.tag) {
      case T::Const: return {e.literal, s};
      case T::Var: return {look(g, e.name), s};
      case T::Last: return {look(g, e.name + "_last"), s};
      case T::Pair: {
        Tuple vs, ss;
        for (std::size_t i = 0; i < e.kids.size(); ++i) {
          auto [v, s2] = step(*e.kids[i], g, s.at(i));
          vs.push_back(v);
          ss.push_back(s2);
        }
        return {Value::tuple(std::move(vs)), Value::tuple(std::move(ss))};
      }
      case T::OpApp: {
        auto [v, s2] = step(*e.kids[0], g, s);
        return {apply_op(*e.op, v), s2};
      }
      case T::Call: {
        auto [v, se] = step(*e.kids[0], g, s.at(1));
        const Decl& d = decl(e.name);
        Gamma local;
        bind_names(d.param, v, local);
        auto [r, sf] = step(*d.body, local, s.at(0));
        return {r, Value::tuple({sf, se})};
      }
      case T::WhereRec: {
        std::size_t mark = g.size();
        const Value& mem = s.at(0);
        for (std::size_t i = 0; i < e.inits.size(); ++i) g.push_back({e.inits[i].name + "_last", mem.at(i)});
        Tuple ss;
        for (std::size_t i = 0; i < e.eqs.size(); ++i) {
          auto [v, s2] = step(*e.eqs[i].rhs, g, s.at(1).at(i));
          g.push_back({e.eqs[i].name(), v});
          ss.push_back(s2);
        }
        auto [v, sb] = step(*e.kids[0], g, s.at(2));
        Tuple m2;
        for (const auto& i : e.inits) m2.push_back(look(g, i.name));
        g.resize(mark);
        return {v, Value::tuple({Value::tuple(std::move(m2)), Value::tuple(std::move(ss)), sb})};
      }
      case T::Present: {
        auto [c, sc] = step(*e.kids[0], g, s.at(0));
        if (c.as_bool()) {
          auto [v, s1] = step(*e.kids[1], g, s.at(1));
          return {v, Value::tuple({sc, s1, s.at(2)})};
        }
        auto [v, s2] = step(*e.kids[2], g, s.at(2));
        return {v, Value::tuple({sc, s.at(1), s2})};
      }
      case T::Reset: {
        auto [c, s2] = step(*e.kids[1], g, s.at(2));
        const Value& from = c.as_bool() ? s.at(0) : s.at(1);
        auto [v, s1] = step(*e.kids[0], g, from);
        return {v, Value::tuple({s.at(0), s1, s2})};
      }
      default: throw Error(ErrorKind::Eval, "reference interpreter: construct outside the deterministic kernel");
    }
  }

 private:
  const KernelProgram& prog_;
};

}  // namespace

Value CoiterInterp::init(const std::string& node) const {
  Machine m(prog_);
  return m.init(*m.decl(node).body);
}

Value CoiterInterp::step(const std::string& node, Value& state, const Value& input) const {
  Machine m(prog_);
  const Decl& d = m.decl(node);
  Gamma g;
  bind_names(d.param, input, g);
  auto [v, s2] = m.step(*d.body, g, state);
  state = s2;
  return v;
}

std::vector<Value> interp_coiter(const KernelProgram& prog, const std::string& node, const std::vector<Value>& inputs,
                                 Value* final_state) {
  CoiterInterp it(prog);
  Value s = it.init(node);
  std::vector<Value> out;
  for (const auto& x : inputs) out.push_back(it.step(node, s, x));
  if (final_state) *final_state = s;
  return out;
}

}  // namespace rpz
