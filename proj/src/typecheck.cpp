#include <map>
#include <set>

#include "rpz/frontend.hpp"
#include "rpz/ops.hpp"

namespace rpz {

FlagPtr flag_root(FlagPtr f) {
  while (f->link) f = f->link;
  return f;
}

namespace {

TypePtr make_type(TypeExpr::Tag tag) {
  auto t = std::make_shared<TypeExpr>();
  t->tag = tag;
  return t;
}

int next_var_id() {
  static thread_local int counter = 0;
  return ++counter;
}

}  // namespace

TypePtr type_var(bool numeric) {
  auto t = make_type(TypeExpr::Tag::Var);
  t->var_id = next_var_id();
  t->numeric = numeric;
  return t;
}
TypePtr type_bool() { return make_type(TypeExpr::Tag::Bool); }
TypePtr type_float() { return make_type(TypeExpr::Tag::Float); }
TypePtr type_int() { return make_type(TypeExpr::Tag::Int); }
TypePtr type_unit() { return make_type(TypeExpr::Tag::Unit); }
TypePtr type_vector() { return make_type(TypeExpr::Tag::Vector); }
TypePtr type_matrix() { return make_type(TypeExpr::Tag::Matrix); }
TypePtr type_pair(TypePtr a, TypePtr b) { return type_tuple({std::move(a), std::move(b)}); }
TypePtr type_tuple(std::vector<TypePtr> items) {
  if (items.empty()) return type_unit();
  if (items.size() == 1) return items[0];
  auto t = make_type(TypeExpr::Tag::Pair);
  t->args = std::move(items);
  return t;
}
TypePtr type_dist(TypePtr t, FlagPtr flag) {
  auto d = make_type(TypeExpr::Tag::Dist);
  d->args = {std::move(t)};
  d->flag = std::move(flag);
  return d;
}
TypePtr type_density(TypePtr t) {
  auto f = std::make_shared<DensityFlag>();
  f->state = DensityFlag::State::Density;
  return type_dist(std::move(t), f);
}
TypePtr type_sampler(TypePtr t) {
  auto f = std::make_shared<DensityFlag>();
  f->state = DensityFlag::State::Sampler;
  return type_dist(std::move(t), f);
}
TypePtr type_fn(TypePtr arg, Kind k, TypePtr ret) {
  auto f = make_type(TypeExpr::Tag::Fn);
  f->args = {std::move(arg), std::move(ret)};
  f->fn_kind = k;
  return f;
}

TypePtr resolve(TypePtr t) {
  while (t->tag == TypeExpr::Tag::Var && t->link) t = t->link;
  return t;
}

std::string type_str(const TypePtr& t0) {
  TypePtr t = resolve(t0);
  switch (t->tag) {
    case TypeExpr::Tag::Var: return (t->numeric ? "'num" : "'a") + std::to_string(t->var_id);
    case TypeExpr::Tag::Bool: return "bool";
    case TypeExpr::Tag::Float: return "float";
    case TypeExpr::Tag::Int: return "int";
    case TypeExpr::Tag::Unit: return "unit";
    case TypeExpr::Tag::Vector: return "vector";
    case TypeExpr::Tag::Matrix: return "matrix";
    case TypeExpr::Tag::Pair: {
      std::string s = "(";
      for (std::size_t i = 0; i < t->args.size(); ++i) s += (i ? " * " : "") + type_str(t->args[i]);
      return s + ")";
    }
    case TypeExpr::Tag::Dist: {
      auto f = flag_root(t->flag);
      return type_str(t->args[0]) + (f->state == DensityFlag::State::Sampler ? " dist*" : " dist");
    }
    case TypeExpr::Tag::Fn:
      return type_str(t->args[0]) + " -" + kind_str(t->fn_kind) + "-> " + type_str(t->args[1]);
  }
  return "?";
}

namespace {

using T = KernelExpr::Tag;

// Equations in an order where direct reads come after their writer when
// possible, so types flow from definitions to uses; cycles fall back to
// source order.
std::vector<std::size_t> check_order(const KernelExpr& w) {
  std::size_t n = w.eqs.size();
  std::map<std::string, std::size_t> writer;
  for (std::size_t i = 0; i < n; ++i) writer[w.eqs[i].name()] = i;
  std::vector<std::set<std::size_t>> deps(n);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& r : direct_reads(*w.eqs[i].rhs)) {
      auto it = writer.find(r);
      if (it != writer.end() && it->second != i) deps[i].insert(it->second);
    }
  std::vector<bool> done(n, false);
  std::vector<std::size_t> order;
  while (order.size() < n) {
    std::size_t pick = n;
    for (std::size_t i = 0; i < n && pick == n; ++i) {
      if (done[i]) continue;
      bool ready = true;
      for (std::size_t d : deps[i]) ready = ready && done[d];
      if (ready) pick = i;
    }
    if (pick == n)
      for (std::size_t i = 0; i < n && pick == n; ++i)
        if (!done[i]) pick = i;
    done[pick] = true;
    order.push_back(pick);
  }
  return order;
}

TypePtr type_of_literal(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::Unit: return type_unit();
    case Value::Kind::Bool: return type_bool();
    case Value::Kind::Int: return type_int();
    case Value::Kind::Float: return type_float();
    case Value::Kind::Vector: return type_vector();
    case Value::Kind::Matrix: return type_matrix();
    case Value::Kind::Tuple: {
      std::vector<TypePtr> items;
      for (const auto& x : v.as_tuple()) items.push_back(type_of_literal(x));
      return type_tuple(std::move(items));
    }
    default: return type_var();
  }
}

// Zero of a scalar or tuple-of-scalars type; false if none exists.
bool typed_zero(const TypePtr& t0, Value& out) {
  TypePtr t = resolve(t0);
  switch (t->tag) {
    case TypeExpr::Tag::Bool: out = Value::boolean(false); return true;
    case TypeExpr::Tag::Int: out = Value::integer(0); return true;
    case TypeExpr::Tag::Float: out = Value::real(0.0); return true;
    case TypeExpr::Tag::Unit: out = Value::unit(); return true;
    case TypeExpr::Tag::Pair: {
      Tuple items;
      for (const auto& a : t->args) {
        Value v;
        if (!typed_zero(a, v)) return false;
        items.push_back(v);
      }
      out = Value::tuple(std::move(items));
      return true;
    }
    default: return false;
  }
}

class Checker : public Unifier {
 public:
  void unify(const TypePtr& expected, const TypePtr& actual) override {
    if (!unify_rec(expected, actual))
      throw Error(ErrorKind::Type, "expected " + type_str(expected) + " but found " + type_str(actual) + where_);
  }

  void require_density(const TypePtr& d) override { density_.push_back({d, where_}); }

  void program(KernelProgram& prog) {
    std::map<std::string, TypePtr> fns;
    for (auto& d : prog.decls) {
      decl_ = &d;
      Env env;
      d.param_type = pattern_type(d.param, env);
      auto [t, k] = expr(d.body, env, d.proba);
      (void)k;
      d.result_type = t;
      fn_types_[d.name] = type_fn(d.param_type, d.proba ? Kind::P : Kind::D, t);
    }
    for (auto& v : numeric_vars_) {
      TypePtr r = resolve(v);
      if (r->tag == TypeExpr::Tag::Var) r->link = type_float();
    }
    for (const auto& [d, at] : density_) {
      TypePtr r = resolve(d);
      if (r->tag == TypeExpr::Tag::Dist && flag_root(r->flag)->state == DensityFlag::State::Sampler)
        throw Error(ErrorKind::Density, "observe requires a distribution with a density" + at);
    }
    for (auto& d : prog.decls) fill_zeros(d.body);
  }

 private:
  using Env = std::vector<std::pair<std::string, TypePtr>>;
  std::map<std::string, TypePtr> fn_types_;
  std::vector<TypePtr> numeric_vars_;
  std::vector<std::pair<TypePtr, std::string>> density_;
  std::string where_;
  const Decl* decl_ = nullptr;
  // Per enclosing block: defined names and names with an init.
  std::vector<std::pair<std::set<std::string>, std::set<std::string>>> blocks_;

  TypePtr fresh(bool numeric = false) {
    TypePtr t = type_var(numeric);
    if (numeric) numeric_vars_.push_back(t);
    return t;
  }

  static bool occurs(const TypePtr& v, const TypePtr& t0) {
    TypePtr t = resolve(t0);
    if (t == v) return true;
    for (const auto& a : t->args)
      if (occurs(v, a)) return true;
    return false;
  }

  bool bind_var(const TypePtr& v, const TypePtr& t) {
    if (t->tag == TypeExpr::Tag::Var) {
      if (v->numeric) {
        t->numeric = true;
        numeric_vars_.push_back(t);
      }
      v->link = t;
      return true;
    }
    if (v->numeric && t->tag != TypeExpr::Tag::Int && t->tag != TypeExpr::Tag::Float) return false;
    if (occurs(v, t)) return false;
    v->link = t;
    return true;
  }

  bool unify_rec(const TypePtr& a0, const TypePtr& b0) {
    TypePtr a = resolve(a0), b = resolve(b0);
    if (a == b) return true;
    if (a->tag == TypeExpr::Tag::Var) return bind_var(a, b);
    if (b->tag == TypeExpr::Tag::Var) return bind_var(b, a);
    if (a->tag != b->tag) return false;
    switch (a->tag) {
      case TypeExpr::Tag::Pair:
        if (a->args.size() != b->args.size()) return false;
        for (std::size_t i = 0; i < a->args.size(); ++i)
          if (!unify_rec(a->args[i], b->args[i])) return false;
        return true;
      case TypeExpr::Tag::Dist: {
        if (!unify_rec(a->args[0], b->args[0])) return false;
        FlagPtr fa = flag_root(a->flag), fb = flag_root(b->flag);
        if (fa != fb) {
          // Join: a sampler-only flag dominates; a density is a subtype.
          if (fa->state == DensityFlag::State::Unknown || fb->state == DensityFlag::State::Sampler) fa->state = fb->state;
          fb->link = fa;
        }
        return true;
      }
      case TypeExpr::Tag::Fn:
        return a->fn_kind == b->fn_kind && unify_rec(a->args[0], b->args[0]) && unify_rec(a->args[1], b->args[1]);
      default: return true;
    }
  }

  TypePtr pattern_type(const Pattern& p, Env& env) {
    switch (p.tag) {
      case Pattern::Tag::Name: {
        TypePtr t = fresh();
        env.push_back({p.name, t});
        return t;
      }
      case Pattern::Tag::Wild: return fresh();
      case Pattern::Tag::Unit: return type_unit();
      case Pattern::Tag::Tuple: {
        std::vector<TypePtr> items;
        for (const auto& q : p.items) items.push_back(pattern_type(q, env));
        return type_tuple(std::move(items));
      }
    }
    return fresh();
  }

  static TypePtr lookup(const Env& env, const std::string& n) {
    for (auto it = env.rbegin(); it != env.rend(); ++it)
      if (it->first == n) return it->second;
    return nullptr;
  }

  void at(const KernelExpr& e) { where_ = " at " + e.loc.str(); }

  [[noreturn]] void kind_error(const KernelExpr& e, const std::string& what) {
    throw Error(ErrorKind::Kind, what + " in deterministic context at " + e.loc.str());
  }

  std::pair<TypePtr, Kind> expr(const KPtr& e, Env& env, bool allow_p) {
    auto [t, k] = expr_inner(*e, env, allow_p);
    e->type = t;
    e->kind = k;
    return {t, k};
  }

  std::pair<TypePtr, Kind> expr_inner(KernelExpr& e, Env& env, bool allow_p) {
    switch (e.tag) {
      case T::Const: return {type_of_literal(e.literal), Kind::D};
      case T::Var: {
        TypePtr t = lookup(env, e.name);
        if (!t) throw Error(ErrorKind::Name, "unbound variable " + e.name + " at " + e.loc.str());
        return {t, Kind::D};
      }
      case T::Last: {
        for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
          if (!it->first.count(e.name)) continue;
          if (!it->second.count(e.name))
            throw Error(ErrorKind::Name, "last " + e.name + " has no init at " + e.loc.str());
          break;
        }
        TypePtr t = lookup(env, e.name);
        if (!t) throw Error(ErrorKind::Name, "unbound variable " + e.name + " at " + e.loc.str());
        return {t, Kind::D};
      }
      case T::Pair: {
        std::vector<TypePtr> items;
        Kind k = Kind::D;
        for (const auto& c : e.kids) {
          auto [ct, ck] = expr(c, env, allow_p);
          items.push_back(ct);
          k = join(k, ck);
        }
        return {type_tuple(std::move(items)), k};
      }
      case T::OpApp: {
        auto [at_, k] = expr(e.kids[0], env, allow_p);
        std::vector<TypePtr> args;
        if (e.op->arity > 1) {
          for (int i = 0; i < e.op->arity; ++i) args.push_back(fresh());
          at(e);
          unify(type_tuple(args), at_);
        } else {
          args.push_back(at_);
        }
        at(e);
        TypePtr r = e.op->type(*this, args);
        track_numeric(r);
        return {r, k};
      }
      case T::Call: {
        auto [at_, k] = expr(e.kids[0], env, allow_p);
        auto it = fn_types_.find(e.name);
        if (it == fn_types_.end()) throw Error(ErrorKind::Name, "unknown function " + e.name + " at " + e.loc.str());
        TypePtr f = it->second;
        if (f->fn_kind == Kind::P && !allow_p) kind_error(e, "call to probabilistic node " + e.name);
        at(e);
        unify(f->args[0], at_);
        return {f->args[1], join(k, f->fn_kind)};
      }
      case T::WhereRec: {
        std::size_t mark = env.size();
        std::map<std::string, TypePtr> vars;
        blocks_.emplace_back();
        for (const auto& i : e.inits) blocks_.back().second.insert(i.name);
        for (const auto& q : e.eqs) {
          blocks_.back().first.insert(q.name());
          if (q.lhs.tag != Pattern::Tag::Name) throw Error(ErrorKind::Type, "equation pattern left after desugaring");
          if (vars.count(q.name())) throw Error(ErrorKind::Name, "duplicate definition of " + q.name());
          vars[q.name()] = fresh();
          env.push_back({q.name(), vars[q.name()]});
        }
        for (auto& i : e.inits) {
          auto it = vars.find(i.name);
          if (it == vars.end()) throw Error(ErrorKind::Name, "init " + i.name + " has no defining equation at " + i.loc.str());
          auto [it_, ik] = expr(i.value, env, allow_p);
          (void)ik;
          at(*i.value);
          unify(it->second, it_);
          i.value->type = it->second;
        }
        Kind k = Kind::D;
        for (std::size_t qi : check_order(e)) {
          auto& q = e.eqs[qi];
          auto [qt, qk] = expr(q.rhs, env, allow_p);
          where_ = " in equation " + q.name() + " at " + q.loc.str();
          unify(vars[q.name()], qt);
          k = join(k, qk);
        }
        auto [bt, bk] = expr(e.kids[0], env, allow_p);
        env.resize(mark);
        blocks_.pop_back();
        return {bt, join(k, bk)};
      }
      case T::Present: {
        auto [ct, ck] = expr(e.kids[0], env, allow_p);
        at(*e.kids[0]);
        unify(type_bool(), ct);
        auto [t1, k1] = expr(e.kids[1], env, allow_p);
        auto [t2, k2] = expr(e.kids[2], env, allow_p);
        at(e);
        unify(t1, t2);
        return {t1, join(ck, join(k1, k2))};
      }
      case T::Reset: {
        auto [bt, bk] = expr(e.kids[0], env, allow_p);
        auto [ct, ck] = expr(e.kids[1], env, allow_p);
        at(*e.kids[1]);
        unify(type_bool(), ct);
        return {bt, join(bk, ck)};
      }
      case T::Sample: {
        if (!allow_p) kind_error(e, "sample");
        auto [dt, dk] = expr(e.kids[0], env, allow_p);
        (void)dk;
        TypePtr t = fresh();
        at(e);
        unify(type_dist(t, std::make_shared<DensityFlag>()), dt);
        return {t, Kind::P};
      }
      case T::Observe: {
        if (!allow_p) kind_error(e, "observe");
        auto [dt, dk] = expr(e.kids[0], env, allow_p);
        auto [vt, vk] = expr(e.kids[1], env, allow_p);
        (void)dk;
        (void)vk;
        TypePtr t = fresh();
        TypePtr d = type_dist(t, std::make_shared<DensityFlag>());
        at(e);
        unify(d, dt);
        unify(t, vt);
        require_density(d);
        return {type_unit(), Kind::P};
      }
      case T::Factor: {
        if (!allow_p) kind_error(e, "factor");
        auto [ft, fk] = expr(e.kids[0], env, allow_p);
        (void)fk;
        at(e);
        unify(type_float(), ft);
        return {type_unit(), Kind::P};
      }
      case T::Infer: {
        auto [bt, bk] = expr(e.kids[0], env, true);
        (void)bk;
        return {type_sampler(bt), Kind::D};
      }
      default: throw Error(ErrorKind::Type, "surface construct left after desugaring at " + e.loc.str());
    }
  }

  void track_numeric(const TypePtr& t) {
    TypePtr r = resolve(t);
    if (r->tag == TypeExpr::Tag::Var && r->numeric) numeric_vars_.push_back(r);
  }

  void fill_zeros(const KPtr& e) {
    if (!e) return;
    for (auto& k : e->kids) fill_zeros(k);
    for (auto& q : e->eqs) fill_zeros(q.rhs);
    for (auto& i : e->inits) {
      if (i.value->tag == T::Const && i.value->literal.is_nil()) {
        Value z;
        if (typed_zero(i.value->type, z)) i.value->literal = z;
      }
    }
  }
};

}  // namespace

void kind_check(KernelProgram& prog) {
  Checker c;
  c.program(prog);
}

}  // namespace rpz
