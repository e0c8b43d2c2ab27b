#include <map>
#include <set>

#include "rpz/frontend.hpp"
#include "rpz/ops.hpp"

namespace rpz {

namespace {

using T = KernelExpr::Tag;

KPtr make_const(Value v, SrcLoc loc) {
  auto e = KernelExpr::make(T::Const, loc);
  e->literal = std::move(v);
  return e;
}

KPtr make_var(const std::string& n, SrcLoc loc) {
  auto e = KernelExpr::make(T::Var, loc);
  e->name = n;
  return e;
}

KPtr make_last(const std::string& n, SrcLoc loc) {
  auto e = KernelExpr::make(T::Last, loc);
  e->name = n;
  return e;
}

KPtr make_op(const std::string& name, std::vector<KPtr> args, SrcLoc loc) {
  auto e = KernelExpr::make(T::OpApp, loc);
  e->name = name;
  e->op = find_op(name);
  if (args.size() == 1) {
    e->kids.push_back(std::move(args[0]));
  } else {
    auto t = KernelExpr::make(T::Pair, loc);
    t->kids = std::move(args);
    e->kids.push_back(t);
  }
  return e;
}

KPtr make_if(KPtr c, KPtr a, KPtr b, SrcLoc loc) { return make_op("if", {std::move(c), std::move(a), std::move(b)}, loc); }

// Folds a tuple of literals into a single literal.
bool fold_constant(const KPtr& e, Value& out) {
  if (e->tag == T::Const) {
    out = e->literal;
    return true;
  }
  if (e->tag != T::Pair) return false;
  Tuple items;
  for (const auto& k : e->kids) {
    Value v;
    if (!fold_constant(k, v)) return false;
    items.push_back(v);
  }
  out = Value::tuple(std::move(items));
  return true;
}

void collect_names(const KPtr& e, std::set<std::string>& out) {
  if (!e) return;
  if (!e->name.empty()) out.insert(e->name);
  for (const auto& k : e->kids) collect_names(k, out);
  for (const auto& i : e->inits) {
    out.insert(i.name);
    collect_names(i.value, out);
  }
  for (const auto& q : e->eqs) {
    std::vector<std::string> ns;
    q.lhs.names(ns);
    out.insert(ns.begin(), ns.end());
    collect_names(q.rhs, out);
  }
}

struct Scope {
  Scope* parent = nullptr;
  std::set<std::string> defined;
  std::set<std::string> has_init;
  std::map<std::string, std::string> dyn_init;
  std::vector<Init> new_inits;
  std::vector<Equation> new_eqs;
  std::string first;
};

class Desugarer {
 public:
  explicit Desugarer(std::set<std::string> taken) : taken_(std::move(taken)) {}

  KPtr boundary(const KPtr& e, Scope* parent) {
    if (e->tag == T::WhereRec) return where(e, parent);
    Scope b;
    b.parent = parent;
    KPtr body = expr(e, b);
    if (b.new_eqs.empty() && b.first.empty()) return body;
    auto w = KernelExpr::make(T::WhereRec, e->loc);
    w->kids.push_back(body);
    finish(*w, b);
    return w;
  }

 private:
  std::set<std::string> taken_;
  int counter_ = 0;

  std::string fresh(const std::string& base) {
    for (;;) {
      std::string n = base + "@" + std::to_string(++counter_);
      if (taken_.insert(n).second) return n;
    }
  }

  const std::string& first_of(Scope& s) {
    if (s.first.empty()) s.first = taken_.insert("first").second ? "first" : fresh("first");
    return s.first;
  }

  void finish(KernelExpr& w, Scope& s) {
    std::vector<Init> inits;
    std::vector<Equation> eqs;
    if (!s.first.empty()) {
      inits.push_back(Init{s.first, make_const(Value::boolean(true), w.loc), w.loc});
      eqs.push_back(Equation{Pattern::named(s.first), make_const(Value::boolean(false), w.loc), w.loc});
    }
    inits.insert(inits.end(), w.inits.begin(), w.inits.end());
    inits.insert(inits.end(), s.new_inits.begin(), s.new_inits.end());
    eqs.insert(eqs.end(), w.eqs.begin(), w.eqs.end());
    eqs.insert(eqs.end(), s.new_eqs.begin(), s.new_eqs.end());
    w.inits = std::move(inits);
    w.eqs = std::move(eqs);
  }

  KPtr last_of(const std::string& x, Scope& cur, SrcLoc loc) {
    for (Scope* s = &cur; s; s = s->parent) {
      if (!s->defined.count(x)) continue;
      auto it = s->dyn_init.find(x);
      if (it == s->dyn_init.end()) break;
      return make_if(make_last(first_of(*s), loc), make_var(it->second, loc), make_last(x, loc), loc);
    }
    return make_last(x, loc);
  }

  void add_init(Scope& s, const std::string& x, SrcLoc loc) {
    if (s.has_init.insert(x).second) s.new_inits.push_back(Init{x, make_const(Value::nil(), loc), loc});
  }

  // Binds a pattern to a fresh or named variable, emitting projections.
  void bind(const Pattern& p, KPtr rhs, std::vector<Equation>& out, Scope& s, SrcLoc loc) {
    switch (p.tag) {
      case Pattern::Tag::Name:
        out.push_back(Equation{p, std::move(rhs), loc});
        return;
      case Pattern::Tag::Wild:
      case Pattern::Tag::Unit: {
        std::string n = fresh(p.tag == Pattern::Tag::Unit ? "unit" : "wild");
        s.defined.insert(n);
        out.push_back(Equation{Pattern::named(n), std::move(rhs), loc});
        return;
      }
      case Pattern::Tag::Tuple: {
        std::string n = fresh("tuple");
        s.defined.insert(n);
        out.push_back(Equation{Pattern::named(n), std::move(rhs), loc});
        std::size_t arity = p.items.size();
        for (std::size_t i = 0; i < arity; ++i) {
          std::string op = "proj@" + std::to_string(i) + "@" + std::to_string(arity);
          bind(p.items[i], make_op(op, {make_var(n, loc)}, loc), out, s, loc);
        }
        return;
      }
    }
  }

  KPtr where(const KPtr& e, Scope* parent) {
    auto w = KernelExpr::make(T::WhereRec, e->loc);
    Scope s;
    s.parent = parent;
    std::set<std::string> with_eq;
    for (const auto& q : e->eqs) {
      std::vector<std::string> ns;
      q.lhs.names(ns);
      with_eq.insert(ns.begin(), ns.end());
    }
    s.defined = with_eq;
    std::vector<std::pair<Init, Value>> const_inits;
    std::vector<Init> dyn_inits;
    for (const auto& i : e->inits) {
      s.defined.insert(i.name);
      Value v;
      if (fold_constant(i.value, v)) {
        const_inits.push_back({i, v});
        s.has_init.insert(i.name);
      } else {
        dyn_inits.push_back(i);
        s.dyn_init[i.name] = fresh("init");
        s.defined.insert(s.dyn_init[i.name]);
      }
    }
    for (const auto& [i, v] : const_inits) w->inits.push_back(Init{i.name, make_const(v, i.loc), i.loc});

    for (const auto& q : e->eqs) bind(q.lhs, expr(q.rhs, s), w->eqs, s, q.loc);
    for (const auto& i : dyn_inits) {
      const std::string& iname = s.dyn_init[i.name];
      auto pres = KernelExpr::make(T::Present, i.loc);
      pres->kids = {make_last(first_of(s), i.loc), boundary(i.value, &s), make_last(iname, i.loc)};
      w->eqs.push_back(Equation{Pattern::named(iname), pres, i.loc});
      add_init(s, iname, i.loc);
      if (!with_eq.count(i.name)) {
        w->eqs.push_back(Equation{Pattern::named(i.name), make_var(iname, i.loc), i.loc});
      }
      add_init(s, i.name, i.loc);
    }
    for (const auto& [i, v] : const_inits) {
      if (!with_eq.count(i.name)) w->eqs.push_back(Equation{Pattern::named(i.name), make_last(i.name, i.loc), i.loc});
    }
    w->kids.push_back(expr(e->kids[0], s));
    finish(*w, s);
    return w;
  }

  KPtr expr(const KPtr& e, Scope& s) {
    switch (e->tag) {
      case T::Const:
      case T::Var: return e;
      case T::Last: return last_of(e->name, s, e->loc);
      case T::WhereRec: return where(e, &s);
      case T::Present: {
        auto p = KernelExpr::make(T::Present, e->loc);
        p->kids = {expr(e->kids[0], s), boundary(e->kids[1], &s), boundary(e->kids[2], &s)};
        return p;
      }
      case T::Reset: {
        auto r = KernelExpr::make(T::Reset, e->loc);
        r->kids = {boundary(e->kids[0], &s), expr(e->kids[1], s)};
        return r;
      }
      case T::Pre: {
        const KPtr& a = e->kids[0];
        if (a->tag == T::Var && s.defined.count(a->name) && !s.dyn_init.count(a->name)) {
          add_init(s, a->name, e->loc);
          return make_last(a->name, e->loc);
        }
        KPtr inner = expr(a, s);
        std::string v = fresh("pre");
        s.defined.insert(v);
        s.new_eqs.push_back(Equation{Pattern::named(v), inner, e->loc});
        add_init(s, v, e->loc);
        return make_last(v, e->loc);
      }
      case T::Arrow: {
        KPtr c = make_last(first_of(s), e->loc);
        return make_if(c, expr(e->kids[0], s), expr(e->kids[1], s), e->loc);
      }
      case T::If: return make_if(expr(e->kids[0], s), expr(e->kids[1], s), expr(e->kids[2], s), e->loc);
      default: {
        auto c = std::make_shared<KernelExpr>(*e);
        for (auto& k : c->kids) k = expr(k, s);
        return c;
      }
    }
  }
};

}  // namespace

KernelProgram desugar(const KernelProgram& prog) {
  KernelProgram out = clone_program(prog);
  for (auto& d : out.decls) {
    std::set<std::string> taken;
    collect_names(d.body, taken);
    std::vector<std::string> ps;
    d.param.names(ps);
    taken.insert(ps.begin(), ps.end());
    Desugarer ds(std::move(taken));
    d.body = ds.boundary(d.body, nullptr);
  }
  return out;
}

}  // namespace rpz
