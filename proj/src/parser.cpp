#include <map>
#include <set>

#include "rpz/frontend.hpp"
#include "rpz/ops.hpp"

namespace rpz {

namespace {

using T = KernelExpr::Tag;

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  KernelProgram program() {
    KernelProgram prog;
    while (peek().type != Token::Type::End) {
      SrcLoc loc = peek().loc;
      expect_kw("let");
      if (peek().type == Token::Type::Ident) {
        // Global constant: let h = 0.1
        std::string name = take().text;
        expect_sym("=");
        KPtr v = unary();
        if (v->tag != T::Const) throw syntax("global constant must be a literal", loc);
        if (constants_.count(name) || prog.find(name)) throw Error(ErrorKind::Name, "duplicate top-level name " + name + " at " + loc.str());
        constants_[name] = v->literal;
        continue;
      }
      Decl d;
      d.loc = loc;
      if (is_kw("node")) {
        take();
      } else if (is_kw("proba")) {
        take();
        d.proba = true;
      } else {
        throw syntax("expected node or proba", peek().loc);
      }
      if (peek().type != Token::Type::Ident) throw syntax("expected declaration name", peek().loc);
      d.name = take().text;
      if (prog.find(d.name) || constants_.count(d.name)) throw Error(ErrorKind::Name, "duplicate top-level name " + d.name + " at " + loc.str());
      d.param = pattern();
      expect_sym("=");
      d.body = expr();
      prog.decls.push_back(std::move(d));
    }
    return prog;
  }

  const std::map<std::string, Value>& constants() const { return constants_; }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::map<std::string, Value> constants_;

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  Token take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool is_kw(const char* k) const { return peek().type == Token::Type::Keyword && peek().text == k; }
  bool is_sym(const char* s) const { return peek().type == Token::Type::Symbol && peek().text == s; }

  static Error syntax(const std::string& msg, SrcLoc loc) { return Error(ErrorKind::Syntax, msg + " at " + loc.str()); }

  void expect_kw(const char* k) {
    if (!is_kw(k)) throw syntax(std::string("expected '") + k + "', found '" + peek().text + "'", peek().loc);
    take();
  }
  void expect_sym(const char* s) {
    if (!is_sym(s)) throw syntax(std::string("expected '") + s + "', found '" + peek().text + "'", peek().loc);
    take();
  }

  Pattern pattern() {
    if (peek().type == Token::Type::Ident) return Pattern::named(take().text);
    if (is_sym("_")) {
      take();
      return Pattern::wild();
    }
    if (is_sym("(")) {
      take();
      if (is_sym(")")) {
        take();
        return Pattern::unit();
      }
      std::vector<Pattern> items{pattern()};
      while (is_sym(",")) {
        take();
        items.push_back(pattern());
      }
      expect_sym(")");
      if (items.size() == 1) return items[0];
      return Pattern::tuple(std::move(items));
    }
    throw syntax("expected pattern", peek().loc);
  }

  // expr := ctrl [where [rec] eqs]
  KPtr expr() {
    KPtr body = ctrl();
    if (is_kw("where")) {
      SrcLoc loc = take().loc;
      if (is_kw("rec")) take();
      auto w = KernelExpr::make(T::WhereRec, loc);
      w->kids.push_back(body);
      equation(*w);
      while (is_kw("and")) {
        take();
        equation(*w);
      }
      return w;
    }
    return body;
  }

  void equation(KernelExpr& w) {
    SrcLoc loc = peek().loc;
    if (is_kw("init")) {
      take();
      if (peek().type != Token::Type::Ident) throw syntax("expected name after init", peek().loc);
      std::string name = take().text;
      expect_sym("=");
      w.inits.push_back(Init{name, ctrl(), loc});
      return;
    }
    Pattern lhs = pattern();
    expect_sym("=");
    w.eqs.push_back(Equation{lhs, ctrl(), loc});
  }

  bool starts_ctrl() const { return is_kw("present") || is_kw("if") || is_kw("reset"); }

  // Control forms and tuples.
  KPtr ctrl() {
    if (starts_ctrl()) return control_form();
    SrcLoc loc = peek().loc;
    KPtr first = arrow();
    if (!is_sym(",")) return first;
    auto t = KernelExpr::make(T::Pair, loc);
    t->kids.push_back(first);
    while (is_sym(",")) {
      take();
      t->kids.push_back(starts_ctrl() ? control_form() : arrow());
    }
    return t;
  }

  KPtr control_form() {
    SrcLoc loc = peek().loc;
    if (is_kw("present")) {
      take();
      auto e = KernelExpr::make(T::Present, loc);
      e->kids.push_back(or_expr());
      expect_sym("->");
      e->kids.push_back(ctrl());
      expect_kw("else");
      e->kids.push_back(ctrl());
      return e;
    }
    if (is_kw("if")) {
      take();
      auto e = KernelExpr::make(T::If, loc);
      e->kids.push_back(ctrl());
      expect_kw("then");
      e->kids.push_back(ctrl());
      expect_kw("else");
      e->kids.push_back(ctrl());
      return e;
    }
    expect_kw("reset");
    auto e = KernelExpr::make(T::Reset, loc);
    e->kids.push_back(ctrl());
    expect_kw("every");
    e->kids.push_back(or_expr());
    return e;
  }

  // Right associative, loosest binary operator.
  KPtr arrow() {
    KPtr lhs = or_expr();
    if (!is_sym("->")) return lhs;
    SrcLoc loc = take().loc;
    auto e = KernelExpr::make(T::Arrow, loc);
    e->kids.push_back(lhs);
    e->kids.push_back(starts_ctrl() ? control_form() : arrow());
    return e;
  }

  KPtr binop(const std::string& op, KPtr a, KPtr b, SrcLoc loc) {
    auto args = KernelExpr::make(T::Pair, loc);
    args->kids = {std::move(a), std::move(b)};
    auto e = KernelExpr::make(T::Apply, loc);
    e->name = op;
    e->kids.push_back(args);
    return e;
  }

  KPtr or_expr() {
    KPtr e = and_expr();
    while (is_sym("||")) {
      SrcLoc loc = take().loc;
      e = binop("||", e, and_expr(), loc);
    }
    return e;
  }

  KPtr and_expr() {
    KPtr e = cmp_expr();
    while (is_sym("&&")) {
      SrcLoc loc = take().loc;
      e = binop("&&", e, cmp_expr(), loc);
    }
    return e;
  }

  KPtr cmp_expr() {
    KPtr e = add_expr();
    for (const char* op : {"=", "<>", "<=", ">=", "<", ">"}) {
      if (is_sym(op)) {
        SrcLoc loc = take().loc;
        return binop(op, e, add_expr(), loc);
      }
    }
    return e;
  }

  KPtr add_expr() {
    KPtr e = mul_expr();
    for (;;) {
      bool found = false;
      for (const char* op : {"+", "-", "+.", "-.", "+@", "-@"}) {
        if (is_sym(op)) {
          SrcLoc loc = take().loc;
          e = binop(op, e, mul_expr(), loc);
          found = true;
          break;
        }
      }
      if (!found) return e;
    }
  }

  KPtr mul_expr() {
    KPtr e = unary();
    for (;;) {
      bool found = false;
      for (const char* op : {"*", "/", "*.", "/.", "*@"}) {
        if (is_sym(op)) {
          SrcLoc loc = take().loc;
          e = binop(op, e, unary(), loc);
          found = true;
          break;
        }
      }
      if (!found) return e;
    }
  }

  KPtr unary() {
    SrcLoc loc = peek().loc;
    if (is_sym("-") || is_sym("-.")) {
      take();
      KPtr x = unary();
      if (x->tag == T::Const && x->literal.is_int()) {
        x->literal = Value::integer(-x->literal.as_int());
        return x;
      }
      if (x->tag == T::Const && x->literal.is_float()) {
        x->literal = Value::real(-x->literal.as_float());
        return x;
      }
      auto e = KernelExpr::make(T::Apply, loc);
      e->name = "~-";
      e->kids.push_back(x);
      return e;
    }
    if (is_kw("not")) {
      take();
      auto e = KernelExpr::make(T::Apply, loc);
      e->name = "not";
      e->kids.push_back(unary());
      return e;
    }
    if (is_kw("pre")) {
      take();
      auto e = KernelExpr::make(T::Pre, loc);
      e->kids.push_back(unary());
      return e;
    }
    if (is_kw("last")) {
      take();
      if (peek().type != Token::Type::Ident) throw syntax("expected name after last", peek().loc);
      auto e = KernelExpr::make(T::Last, loc);
      e->name = take().text;
      return e;
    }
    if (is_kw("sample") || is_kw("factor")) {
      auto e = KernelExpr::make(is_kw("sample") ? T::Sample : T::Factor, loc);
      take();
      e->kids.push_back(atom());
      return e;
    }
    if (is_kw("observe")) {
      take();
      KPtr a = atom();
      if (a->tag != T::Pair || a->kids.size() != 2) throw syntax("observe expects (distribution, value)", loc);
      auto e = KernelExpr::make(T::Observe, loc);
      e->kids = a->kids;
      return e;
    }
    if (is_kw("infer")) {
      take();
      auto e = KernelExpr::make(T::Infer, loc);
      if (peek().type == Token::Type::Int) e->particles = std::stol(take().text);
      if (e->particles < 0) throw syntax("particle count must be positive", loc);
      e->kids.push_back(app());
      return e;
    }
    return app();
  }

  bool starts_atom() const {
    const Token& t = peek();
    return t.type == Token::Type::Ident || t.type == Token::Type::Int || t.type == Token::Type::Float ||
           is_kw("true") || is_kw("false") || is_sym("(");
  }

  KPtr app() {
    SrcLoc loc = peek().loc;
    if (peek().type == Token::Type::Ident && peek(1).type != Token::Type::End) {
      // Lookahead: an identifier followed by an atom is an application.
      std::size_t save = pos_;
      std::string name = take().text;
      if (starts_atom()) {
        std::vector<KPtr> args;
        while (starts_atom()) args.push_back(atom());
        auto e = KernelExpr::make(T::Apply, loc);
        e->name = name;
        if (args.size() == 1) {
          e->kids.push_back(args[0]);
        } else {
          auto t = KernelExpr::make(T::Pair, loc);
          t->kids = std::move(args);
          e->kids.push_back(t);
        }
        return e;
      }
      pos_ = save;
    }
    return atom();
  }

  KPtr atom() {
    const Token& t = peek();
    SrcLoc loc = t.loc;
    if (t.type == Token::Type::Int) {
      auto e = KernelExpr::make(T::Const, loc);
      e->literal = Value::integer(std::stoll(take().text));
      return e;
    }
    if (t.type == Token::Type::Float) {
      auto e = KernelExpr::make(T::Const, loc);
      e->literal = Value::real(std::stod(take().text));
      return e;
    }
    if (is_kw("true") || is_kw("false")) {
      auto e = KernelExpr::make(T::Const, loc);
      e->literal = Value::boolean(take().text == "true");
      return e;
    }
    if (t.type == Token::Type::Ident) {
      auto e = KernelExpr::make(T::Var, loc);
      e->name = take().text;
      return e;
    }
    if (is_sym("(")) {
      take();
      if (is_sym(")")) {
        take();
        auto e = KernelExpr::make(T::Const, loc);
        e->literal = Value::unit();
        return e;
      }
      KPtr e = expr();
      expect_sym(")");
      return e;
    }
    throw syntax(t.type == Token::Type::End ? std::string("unexpected end of input") : "unexpected '" + t.text + "'", loc);
  }
};

// Name resolution over the parsed tree.
class Resolver {
 public:
  Resolver(const KernelProgram& prog, const std::map<std::string, Value>& consts) : prog_(prog), consts_(consts) {}

  void decl(Decl& d, std::size_t index) {
    index_ = index;
    std::vector<std::string> params;
    d.param.names(params);
    std::set<std::string> seen;
    for (const auto& p : params)
      if (!seen.insert(p).second) throw Error(ErrorKind::Name, "duplicate parameter " + p + " in " + d.name);
    Scope top;
    top.vars.insert(params.begin(), params.end());
    scopes_.push_back(std::move(top));
    d.body = expr(d.body);
    scopes_.pop_back();
  }

 private:
  struct Scope {
    std::set<std::string> vars;
    std::set<std::string> where_defined;
  };
  const KernelProgram& prog_;
  const std::map<std::string, Value>& consts_;
  std::vector<Scope> scopes_;
  std::size_t index_ = 0;

  bool bound(const std::string& n) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
      if (it->vars.count(n)) return true;
    return false;
  }
  bool where_bound(const std::string& n) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      if (it->where_defined.count(n)) return true;
      if (it->vars.count(n)) return false;
    }
    return false;
  }

  int decl_index(const std::string& n) const {
    for (std::size_t i = 0; i < prog_.decls.size(); ++i)
      if (prog_.decls[i].name == n) return static_cast<int>(i);
    return -1;
  }

  KPtr expr(KPtr e) {
    switch (e->tag) {
      case T::Var: {
        if (bound(e->name)) return e;
        auto c = consts_.find(e->name);
        if (c != consts_.end()) {
          auto k = KernelExpr::make(T::Const, e->loc);
          k->literal = c->second;
          return k;
        }
        throw Error(ErrorKind::Name, "unbound variable " + e->name + " at " + e->loc.str());
      }
      case T::Last:
        if (!where_bound(e->name))
          throw Error(ErrorKind::Name, "last " + e->name + " requires a name defined by an equation at " + e->loc.str());
        return e;
      case T::Apply: {
        for (auto& k : e->kids) k = expr(k);
        int di = decl_index(e->name);
        if (di >= 0) {
          if (static_cast<std::size_t>(di) >= index_)
            throw Error(ErrorKind::Name, e->name + " is used before its declaration at " + e->loc.str());
          e->tag = T::Call;
          return e;
        }
        if (const Op* op = find_op(e->name)) {
          e->tag = T::OpApp;
          e->op = op;
          return e;
        }
        throw Error(ErrorKind::Name, "unknown function " + e->name + " at " + e->loc.str());
      }
      case T::WhereRec: {
        Scope s;
        for (const auto& q : e->eqs) {
          std::vector<std::string> ns;
          q.lhs.names(ns);
          for (const auto& n : ns) {
            if (!s.vars.insert(n).second)
              throw Error(ErrorKind::Name, "duplicate definition of " + n + " at " + q.loc.str());
            s.where_defined.insert(n);
          }
        }
        std::set<std::string> init_seen;
        for (const auto& i : e->inits) {
          if (!init_seen.insert(i.name).second)
            throw Error(ErrorKind::Name, "duplicate init of " + i.name + " at " + i.loc.str());
          s.vars.insert(i.name);
          s.where_defined.insert(i.name);
        }
        scopes_.push_back(std::move(s));
        for (auto& i : e->inits) i.value = expr(i.value);
        for (auto& q : e->eqs) q.rhs = expr(q.rhs);
        e->kids[0] = expr(e->kids[0]);
        scopes_.pop_back();
        return e;
      }
      default:
        for (auto& k : e->kids) k = expr(k);
        return e;
    }
  }
};

}  // namespace

KernelProgram parse(const std::string& source) {
  Parser p(lex(source));
  KernelProgram prog = p.program();
  Resolver r(prog, p.constants());
  for (std::size_t i = 0; i < prog.decls.size(); ++i) r.decl(prog.decls[i], i);
  return prog;
}

}  // namespace rpz
