#include "rpz/compile.hpp"

#include <set>

#include "rpz/eval.hpp"
#include "rpz/frontend.hpp"

namespace rpz {

int CompiledProgram::index(const std::string& name) const {
  for (std::size_t i = 0; i < decls.size(); ++i)
    if (decls[i].name == name) return static_cast<int>(i);
  return -1;
}

const CompiledDecl& CompiledProgram::at(const std::string& name) const {
  int i = index(name);
  if (i < 0) throw Error(ErrorKind::Name, "no declaration named " + name);
  return decls[static_cast<std::size_t>(i)];
}

std::vector<std::string> CompiledProgram::names() const {
  std::vector<std::string> out;
  for (const auto& d : decls) out.push_back(d.name);
  return out;
}

namespace {

using T = KernelExpr::Tag;

MPattern to_mpattern(const Pattern& p) {
  switch (p.tag) {
    case Pattern::Tag::Name: return MPattern::named(p.name);
    case Pattern::Tag::Wild: return MPattern::wild();
    case Pattern::Tag::Unit: return MPattern::tuple({});
    case Pattern::Tag::Tuple: {
      std::vector<MPattern> items;
      for (const auto& q : p.items) items.push_back(to_mpattern(q));
      return MPattern::tuple(std::move(items));
    }
  }
  return MPattern::wild();
}

std::string last_name(const std::string& x) { return x + "@last"; }

class Allocator {
 public:
  explicit Allocator(const CompiledProgram& p) : prog_(p) {}

  Value alloc(const KernelExpr& e) {
    switch (e.tag) {
      case T::Const:
      case T::Var:
      case T::Last: return Value::unit();
      case T::Pair: {
        Tuple items;
        for (const auto& k : e.kids) items.push_back(alloc(*k));
        return Value::tuple(std::move(items));
      }
      case T::WhereRec: {
        Tuple mem, eqs;
        for (const auto& i : e.inits) mem.push_back(i.value->literal);
        for (const auto& q : e.eqs) eqs.push_back(alloc(*q.rhs));
        return Value::tuple({Value::tuple(std::move(mem)), Value::tuple(std::move(eqs)), alloc(*e.kids[0])});
      }
      case T::Present: return Value::tuple({alloc(*e.kids[0]), alloc(*e.kids[1]), alloc(*e.kids[2])});
      case T::Reset: return Value::tuple({alloc(*e.kids[0]), alloc(*e.kids[0]), alloc(*e.kids[1])});
      case T::OpApp:
      case T::Sample:
      case T::Factor: return alloc(*e.kids[0]);
      case T::Call: return Value::tuple({copy_cells(prog_.at(e.name).init), alloc(*e.kids[0])});
      case T::Observe: return Value::tuple({alloc(*e.kids[0]), alloc(*e.kids[1])});
      case T::Infer:
        return Value::cell(std::make_shared<InferCell>(alloc(*e.kids[0]), e.particles, site_++));
      default: throw Error(ErrorKind::Eval, "allocate: surface construct at " + e.loc.str());
    }
  }

 private:
  const CompiledProgram& prog_;
  int site_ = 0;
};

class Compiler {
 public:
  explicit Compiler(const CompiledProgram& p) : prog_(p) {}

  // fun s -> (value, state')
  MPtr comp(const KernelExpr& e) {
    switch (e.tag) {
      case T::Const: {
        std::string s = fresh("s");
        return m_fun(MPattern::named(s), m_tuple({m_const(e.literal), m_var(s)}));
      }
      case T::Var: {
        std::string s = fresh("s");
        return m_fun(MPattern::named(s), m_tuple({m_var(e.name), m_var(s)}));
      }
      case T::Last: {
        std::string s = fresh("s");
        return m_fun(MPattern::named(s), m_tuple({m_var(last_name(e.name)), m_var(s)}));
      }
      case T::Pair: {
        std::vector<MPattern> ins;
        std::vector<std::string> outs, vals;
        std::vector<std::pair<MPattern, MPtr>> lets;
        for (const auto& k : e.kids) {
          std::string s = fresh("s"), v = fresh("v"), s2 = fresh("s");
          ins.push_back(MPattern::named(s));
          vals.push_back(v);
          outs.push_back(s2);
          lets.push_back({MPattern::tuple({MPattern::named(v), MPattern::named(s2)}), m_app(comp(*k), m_var(s))});
        }
        std::vector<MPtr> vv, ss;
        for (const auto& v : vals) vv.push_back(m_var(v));
        for (const auto& s : outs) ss.push_back(m_var(s));
        MPtr body = m_tuple({m_tuple(std::move(vv)), m_tuple(std::move(ss))});
        for (auto it = lets.rbegin(); it != lets.rend(); ++it) body = m_let(it->first, it->second, body);
        return m_fun(MPattern::tuple(std::move(ins)), body);
      }
      case T::OpApp: {
        std::string s = fresh("s"), v = fresh("v"), s2 = fresh("s");
        return m_fun(MPattern::named(s),
                     m_let(pair_pat(v, s2), m_app(comp(*e.kids[0]), m_var(s)),
                           m_tuple({m_op(e.op, m_var(v)), m_var(s2)})));
      }
      case T::Call: {
        std::string sf = fresh("s"), se = fresh("s"), v1 = fresh("v"), se2 = fresh("s"), v2 = fresh("v"),
                    sf2 = fresh("s");
        int idx = prog_.index(e.name);
        MPtr body = m_let(pair_pat(v1, se2), m_app(comp(*e.kids[0]), m_var(se)),
                          m_let(pair_pat(v2, sf2), m_app(m_global(idx), m_tuple({m_var(sf), m_var(v1)})),
                                m_tuple({m_var(v2), m_tuple({m_var(sf2), m_var(se2)})})));
        return m_fun(MPattern::tuple({MPattern::named(sf), MPattern::named(se)}), body);
      }
      case T::WhereRec: {
        std::vector<MPattern> mems, ins;
        std::vector<std::pair<MPattern, MPtr>> lets;
        for (const auto& i : e.inits) {
          std::string m = fresh("m");
          mems.push_back(MPattern::named(m));
          lets.push_back({MPattern::named(last_name(i.name)), m_var(m)});
        }
        std::vector<MPtr> outs;
        for (const auto& q : e.eqs) {
          std::string s = fresh("s"), s2 = fresh("s");
          ins.push_back(MPattern::named(s));
          outs.push_back(m_var(s2));
          lets.push_back({MPattern::tuple({MPattern::named(q.name()), MPattern::named(s2)}), m_app(comp(*q.rhs), m_var(s))});
        }
        std::string sb = fresh("s"), v = fresh("v"), sb2 = fresh("s");
        lets.push_back({pair_pat(v, sb2), m_app(comp(*e.kids[0]), m_var(sb))});
        std::vector<MPtr> mem_out;
        for (const auto& i : e.inits) mem_out.push_back(m_var(i.name));
        MPtr body = m_tuple({m_var(v), m_tuple({m_tuple(std::move(mem_out)), m_tuple(std::move(outs)), m_var(sb2)})});
        for (auto it = lets.rbegin(); it != lets.rend(); ++it) body = m_let(it->first, it->second, body);
        return m_fun(MPattern::tuple({MPattern::tuple(std::move(mems)), MPattern::tuple(std::move(ins)), MPattern::named(sb)}),
                     body);
      }
      case T::Present: {
        std::string s = fresh("s"), s1 = fresh("s"), s2 = fresh("s"), v = fresh("v"), sp = fresh("s"), v1 = fresh("v"),
                    s1p = fresh("s"), v2 = fresh("v"), s2p = fresh("s");
        MPtr then_b = m_let(pair_pat(v1, s1p), m_app(comp(*e.kids[1]), m_var(s1)),
                            m_tuple({m_var(v1), m_tuple({m_var(sp), m_var(s1p), m_var(s2)})}));
        MPtr else_b = m_let(pair_pat(v2, s2p), m_app(comp(*e.kids[2]), m_var(s2)),
                            m_tuple({m_var(v2), m_tuple({m_var(sp), m_var(s1), m_var(s2p)})}));
        return m_fun(MPattern::tuple({MPattern::named(s), MPattern::named(s1), MPattern::named(s2)}),
                     m_let(pair_pat(v, sp), m_app(comp(*e.kids[0]), m_var(s)), m_if(m_var(v), then_b, else_b)));
      }
      case T::Reset: {
        std::string s0 = fresh("s"), s1 = fresh("s"), s2 = fresh("s"), v2 = fresh("v"), s2p = fresh("s"), s = fresh("s"),
                    v1 = fresh("v"), s1p = fresh("s");
        MPtr body = m_let(
            pair_pat(v2, s2p), m_app(comp(*e.kids[1]), m_var(s2)),
            m_let(MPattern::named(s), m_if(m_var(v2), m_copy(m_var(s0)), m_var(s1)),
                  m_let(pair_pat(v1, s1p), m_app(comp(*e.kids[0]), m_var(s)),
                        m_tuple({m_var(v1), m_tuple({m_var(s0), m_var(s1p), m_var(s2p)})}))));
        return m_fun(MPattern::tuple({MPattern::named(s0), MPattern::named(s1), MPattern::named(s2)}), body);
      }
      case T::Sample: {
        std::string s = fresh("s"), mu = fresh("mu"), s2 = fresh("s"), v = fresh("v");
        return m_fun(MPattern::named(s),
                     m_let(pair_pat(mu, s2), m_app(comp(*e.kids[0]), m_var(s)),
                           m_let(MPattern::named(v), m_sample(m_var(mu)), m_tuple({m_var(v), m_var(s2)}))));
      }
      case T::Factor: {
        std::string s = fresh("s"), v = fresh("v"), s2 = fresh("s");
        return m_fun(MPattern::named(s),
                     m_let(pair_pat(v, s2), m_app(comp(*e.kids[0]), m_var(s)),
                           m_let(MPattern::wild(), m_factor(m_var(v)), m_tuple({m_const(Value::unit()), m_var(s2)}))));
      }
      case T::Observe: {
        std::string s1 = fresh("s"), s2 = fresh("s"), v1 = fresh("v"), s1p = fresh("s"), v2 = fresh("v"),
                    s2p = fresh("s");
        MPtr body = m_let(pair_pat(v1, s1p), m_app(comp(*e.kids[0]), m_var(s1)),
                          m_let(pair_pat(v2, s2p), m_app(comp(*e.kids[1]), m_var(s2)),
                                m_let(MPattern::wild(), m_observe(m_var(v1), m_var(v2)),
                                      m_tuple({m_const(Value::unit()), m_tuple({m_var(s1p), m_var(s2p)})}))));
        return m_fun(MPattern::tuple({MPattern::named(s1), MPattern::named(s2)}), body);
      }
      case T::Infer: {
        std::string sigma = fresh("sigma"), mu = fresh("mu"), sigma2 = fresh("sigma");
        std::string s = fresh("s");
        MPtr model = m_fun(MPattern::named(s), m_app(comp(*e.kids[0]), m_var(s)));
        return m_fun(MPattern::named(sigma), m_let(pair_pat(mu, sigma2), m_infer(e.particles, model, m_var(sigma)),
                                                   m_tuple({m_var(mu), m_var(sigma2)})));
      }
      default: throw Error(ErrorKind::Eval, "compile: surface construct at " + e.loc.str());
    }
  }

 private:
  const CompiledProgram& prog_;
  int counter_ = 0;

  std::string fresh(const std::string& base) { return base + "@" + std::to_string(++counter_); }
  static MPattern pair_pat(const std::string& a, const std::string& b) {
    return MPattern::tuple({MPattern::named(a), MPattern::named(b)});
  }
};

// ---- static reduction ----

using Tg = MufTerm::Tag;
using SymSet = std::set<int>;

void pattern_vars(const MPattern& p, SymSet& out) {
  if (p.tag == MPattern::Tag::Name) out.insert(p.sym);
  for (const auto& q : p.items) pattern_vars(q, out);
}

void free_vars(const MPtr& t, SymSet& out) {
  switch (t->tag) {
    case Tg::Var: out.insert(t->sym); return;
    case Tg::Let: {
      free_vars(t->kids[0], out);
      SymSet inner, bound;
      free_vars(t->kids[1], inner);
      pattern_vars(t->pat, bound);
      for (int v : inner)
        if (!bound.count(v)) out.insert(v);
      return;
    }
    case Tg::Fun: {
      SymSet inner, bound;
      free_vars(t->kids[0], inner);
      pattern_vars(t->pat, bound);
      for (int v : inner)
        if (!bound.count(v)) out.insert(v);
      return;
    }
    default:
      for (const auto& k : t->kids) free_vars(k, out);
  }
}

void binders(const MPtr& t, SymSet& out) {
  if (t->tag == Tg::Let || t->tag == Tg::Fun) pattern_vars(t->pat, out);
  for (const auto& k : t->kids) binders(k, out);
}

bool intersects(const SymSet& a, const SymSet& b) {
  for (int x : a)
    if (b.count(x)) return true;
  return false;
}

bool pure(const MPtr& t) {
  if (t->tag == Tg::Var || t->tag == Tg::Const) return true;
  if (t->tag == Tg::Tuple) {
    for (const auto& k : t->kids)
      if (!pure(k)) return false;
    return true;
  }
  return false;
}

MPtr with_kids(const MPtr& t, std::vector<MPtr> kids) {
  auto c = std::make_shared<MufTerm>(*t);
  c->kids = std::move(kids);
  return c;
}

// Replaces free occurrences of x by r (a variable or constant).
MPtr subst(const MPtr& t, int x, const MPtr& r) {
  switch (t->tag) {
    case Tg::Var: return t->sym == x ? r : t;
    case Tg::Const:
    case Tg::Global: return t;
    case Tg::Let: {
      MPtr a = subst(t->kids[0], x, r);
      SymSet bound;
      pattern_vars(t->pat, bound);
      MPtr b = bound.count(x) ? t->kids[1] : subst(t->kids[1], x, r);
      return with_kids(t, {a, b});
    }
    case Tg::Fun: {
      SymSet bound;
      pattern_vars(t->pat, bound);
      if (bound.count(x)) return t;
      return with_kids(t, {subst(t->kids[0], x, r)});
    }
    default: {
      std::vector<MPtr> kids;
      for (const auto& k : t->kids) kids.push_back(subst(k, x, r));
      return with_kids(t, std::move(kids));
    }
  }
}

MPtr reduce(const MPtr& t);

MPtr reduce_node(const MPtr& t) {
  if (t->tag == Tg::App && t->kids[0]->tag == Tg::Fun) {
    const MPtr& f = t->kids[0];
    return reduce(m_let(f->pat, t->kids[1], f->kids[0]));
  }
  if (t->tag != Tg::Let) return t;
  const MPattern& p = t->pat;
  const MPtr& a = t->kids[0];
  const MPtr& c = t->kids[1];
  // let p = (let q = a' in b) in c  ->  let q = a' in let p = b in c
  if (a->tag == Tg::Let) {
    SymSet qv, fc;
    pattern_vars(a->pat, qv);
    free_vars(c, fc);
    if (!intersects(qv, fc)) return reduce(m_let(a->pat, a->kids[0], reduce(m_let(p, a->kids[1], c))));
  }
  // let (p1, ..., pn) = (a1, ..., an) in c  ->  let p1 = a1 in ... in c
  if (p.tag == MPattern::Tag::Tuple && a->tag == Tg::Tuple && p.items.size() == a->kids.size()) {
    bool ok = true;
    SymSet bound;
    for (std::size_t i = 0; i < p.items.size() && ok; ++i) {
      SymSet fa;
      free_vars(a->kids[i], fa);
      if (intersects(bound, fa)) ok = false;
      pattern_vars(p.items[i], bound);
    }
    if (ok) {
      MPtr body = c;
      for (std::size_t i = p.items.size(); i-- > 0;) body = m_let(p.items[i], a->kids[i], body);
      return reduce(body);
    }
  }
  if (p.tag == MPattern::Tag::Wild && pure(a)) return c;
  if (p.tag == MPattern::Tag::Name) {
    SymSet fc;
    free_vars(c, fc);
    if (!fc.count(p.sym) && pure(a)) return c;
    if (a->tag == Tg::Const) return reduce(subst(c, p.sym, a));
    if (a->tag == Tg::Var) {
      if (a->sym == p.sym) return c;
      SymSet bc;
      binders(c, bc);
      if (!bc.count(a->sym)) return reduce(subst(c, p.sym, a));
    }
  }
  return t;
}

MPtr reduce(const MPtr& t) {
  if (t->kids.empty()) return t;
  std::vector<MPtr> kids;
  bool changed = false;
  for (const auto& k : t->kids) {
    kids.push_back(reduce(k));
    changed = changed || kids.back() != k;
  }
  MPtr base = changed ? with_kids(t, std::move(kids)) : t;
  return reduce_node(base);
}

}  // namespace

Value allocate(const KernelExpr& e, const CompiledProgram& prog) {
  Allocator a(prog);
  return a.alloc(e);
}

MPtr compile_expr(const KernelExpr& e, const CompiledProgram& prog) {
  Compiler c(prog);
  return c.comp(e);
}

MPtr static_reduce(const MPtr& t) { return reduce(t); }

CompiledProgram compile_program(const KernelProgram& prog, bool do_reduce) {
  CompiledProgram out;
  out.source = prog;
  for (const auto& d : prog.decls) {
    CompiledDecl cd;
    cd.name = d.name;
    cd.proba = d.proba;
    cd.param = to_mpattern(d.param);
    cd.init = allocate(*d.body, out);
    Compiler c(out);
    std::string s = "s@step";
    MPtr body = m_app(c.comp(*d.body), m_var(s));
    if (do_reduce) body = static_reduce(body);
    cd.step = m_fun(MPattern::tuple({MPattern::named(s), cd.param}), body);
    out.decls.push_back(std::move(cd));
  }
  return out;
}

CompiledProgram compile_source(const std::string& source, bool reduce) {
  return compile_program(load_program(source), reduce);
}

}  // namespace rpz
