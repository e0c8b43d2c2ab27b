#include "rpz/eval.hpp"

#include "rpz/compile.hpp"
#include "rpz/rng.hpp"

namespace rpz {

const Value& Env::lookup(int sym) const {
  for (const Env* e = this; e; e = e->parent_) {
    for (auto it = e->vars_.rbegin(); it != e->vars_.rend(); ++it)
      if (it->first == sym) return it->second;
  }
  throw Error(ErrorKind::Eval, "unbound variable " + symbol_name(sym) + " during evaluation");
}

std::shared_ptr<InferCell> InferCell::clone() const {
  auto c = std::make_shared<InferCell>(copy_cells(init_), particles_, site_);
  if (engine_) c->engine_ = engine_->clone();
  return c;
}

namespace {

bool has_cell(const Value& v) {
  if (v.is_cell()) return true;
  if (v.is_tuple())
    for (const auto& x : v.as_tuple())
      if (has_cell(x)) return true;
  return false;
}

Value copy_cells_rec(const Value& v) {
  if (v.is_cell()) return Value::cell(v.as_cell()->clone());
  if (v.is_tuple() && has_cell(v)) {
    Tuple items;
    items.reserve(v.arity());
    for (const auto& x : v.as_tuple()) items.push_back(copy_cells_rec(x));
    return Value::tuple(std::move(items));
  }
  return v;
}

[[noreturn]] void unreachable(const char* what) {
  throw Error(ErrorKind::Eval, std::string("unreachable: ") + what + " under the deterministic evaluator");
}

}  // namespace

Value copy_cells(const Value& s) { return copy_cells_rec(s); }

Value Effects::sample(const Value&) { unreachable("sample"); }
void Effects::observe(const Value&, const Value&) { unreachable("observe"); }
void Effects::factor(const Value&) { unreachable("factor"); }
bool Effects::truth(const Value& c) {
  if (!c.is_bool()) throw Error(ErrorKind::Eval, "condition is not a boolean: " + to_string(c));
  return c.as_bool();
}
Value Effects::copy_state(const Value& s) { return copy_cells(s); }

Value Effects::infer(const MufTerm& term, InferCell& cell, const Env& env, const CompiledProgram& prog) {
  if (!cell.engine()) {
    long n = cfg_.particles_override > 0 ? cfg_.particles_override
                                         : (cell.particles() > 0 ? cell.particles() : cfg_.default_particles);
    EngineConfig sub = cfg_;
    sub.key = mix_key(cfg_.key, static_cast<std::uint64_t>(cell.site()) + 1);
    cell.set_engine(make_engine(sub, cell.init(), n));
  }
  Value d = cell.engine()->step(*term.kids[0], env, prog);
  step_log_evidence += cell.engine()->log_evidence();
  step_live_nodes += cell.engine()->live_nodes();
  return d;
}

void bind_pattern(const MPattern& p, const Value& v, Env& env) {
  switch (p.tag) {
    case MPattern::Tag::Name: env.push(p.sym, v); return;
    case MPattern::Tag::Wild: return;
    case MPattern::Tag::Tuple:
      if (v.is_nil()) {
        for (const auto& q : p.items) bind_pattern(q, v, env);
        return;
      }
      if (p.items.empty() && v.is_unit()) return;
      if (!v.is_tuple() || v.arity() != p.items.size())
        throw Error(ErrorKind::Eval, "pattern " + p.str() + " does not match " + to_string(v));
      for (std::size_t i = 0; i < p.items.size(); ++i) bind_pattern(p.items[i], v.at(i), env);
      return;
  }
}

Value eval(const MufTerm& t, Env& env, Effects& fx, const CompiledProgram& prog) {
  using Tg = MufTerm::Tag;
  switch (t.tag) {
    case Tg::Const: return t.literal;
    case Tg::Var: return env.lookup(t.sym);
    case Tg::Tuple: {
      Tuple items;
      items.reserve(t.kids.size());
      for (const auto& k : t.kids) items.push_back(eval(*k, env, fx, prog));
      return Value::tuple(std::move(items));
    }
    case Tg::Op: return fx.apply(*t.op, eval(*t.kids[0], env, fx, prog));
    case Tg::App: {
      Value arg = eval(*t.kids[1], env, fx, prog);
      const MufTerm& f = *t.kids[0];
      if (f.tag == Tg::Fun) {
        std::size_t m = env.mark();
        bind_pattern(f.pat, arg, env);
        Value r = eval(*f.kids[0], env, fx, prog);
        env.reset(m);
        return r;
      }
      if (f.tag == Tg::Global) {
        const MufTerm& step = *prog.decls.at(static_cast<std::size_t>(f.sym)).step;
        Env local;
        bind_pattern(step.pat, arg, local);
        return eval(*step.kids[0], local, fx, prog);
      }
      throw Error(ErrorKind::Eval, "application of a non-function");
    }
    case Tg::Global: throw Error(ErrorKind::Eval, "step function used as a value");
    case Tg::If:
      return fx.truth(eval(*t.kids[0], env, fx, prog)) ? eval(*t.kids[1], env, fx, prog) : eval(*t.kids[2], env, fx, prog);
    case Tg::Let: {
      Value a = eval(*t.kids[0], env, fx, prog);
      std::size_t m = env.mark();
      bind_pattern(t.pat, a, env);
      Value r = eval(*t.kids[1], env, fx, prog);
      env.reset(m);
      return r;
    }
    case Tg::Fun: throw Error(ErrorKind::Eval, "unapplied function");
    case Tg::Sample: return fx.sample(eval(*t.kids[0], env, fx, prog));
    case Tg::Observe: {
      Value d = eval(*t.kids[0], env, fx, prog);
      Value v = eval(*t.kids[1], env, fx, prog);
      fx.observe(d, v);
      return Value::unit();
    }
    case Tg::Factor:
      fx.factor(eval(*t.kids[0], env, fx, prog));
      return Value::unit();
    case Tg::Infer: {
      Value cell = eval(*t.kids[1], env, fx, prog);
      if (!cell.is_cell()) throw Error(ErrorKind::Eval, "infer state is not an inference cell");
      Value mu = fx.infer(t, *cell.as_cell(), env, prog);
      return Value::pair(mu, cell);
    }
    case Tg::Copy: return fx.copy_state(eval(*t.kids[0], env, fx, prog));
  }
  throw Error(ErrorKind::Eval, "unknown term");
}

Value step_node(const CompiledProgram& prog, int decl, Value& state, const Value& input, Effects& fx) {
  const MufTerm& step = *prog.decls.at(static_cast<std::size_t>(decl)).step;
  Env env;
  bind_pattern(step.pat, Value::pair(state, input), env);
  Value r = eval(*step.kids[0], env, fx, prog);
  state = r.at(1);
  return r.at(0);
}

}  // namespace rpz
