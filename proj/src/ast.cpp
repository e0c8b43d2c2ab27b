#include "rpz/ast.hpp"

#include "rpz/ops.hpp"

namespace rpz {

void Pattern::names(std::vector<std::string>& out) const {
  if (tag == Tag::Name) out.push_back(name);
  for (const auto& p : items) p.names(out);
}

std::string Pattern::str() const {
  switch (tag) {
    case Tag::Name: return name;
    case Tag::Wild: return "_";
    case Tag::Unit: return "()";
    case Tag::Tuple: {
      std::string s = "(";
      for (std::size_t i = 0; i < items.size(); ++i) s += (i ? ", " : "") + items[i].str();
      return s + ")";
    }
  }
  return "?";
}

KPtr clone_expr(const KPtr& e) {
  if (!e) return nullptr;
  auto c = std::make_shared<KernelExpr>(*e);
  for (auto& k : c->kids) k = clone_expr(k);
  for (auto& i : c->inits) i.value = clone_expr(i.value);
  for (auto& q : c->eqs) q.rhs = clone_expr(q.rhs);
  return c;
}

const Decl* KernelProgram::find(const std::string& name) const {
  for (const auto& d : decls)
    if (d.name == name) return &d;
  return nullptr;
}

KernelProgram clone_program(const KernelProgram& p) {
  KernelProgram q = p;
  for (auto& d : q.decls) d.body = clone_expr(d.body);
  return q;
}

namespace {

bool is_infix(const std::string& n) {
  static const char* const ops[] = {"+",  "-",  "*",  "/",  "+.", "-.", "*.", "/.", "+@", "-@",
                                    "*@", "=",  "<>", "<",  ">",  "<=", ">=", "&&", "||"};
  for (const char* o : ops)
    if (n == o) return true;
  return false;
}

std::string show_const(const Value& v) {
  if (v.is_float()) {
    std::string s = format_double(v.as_float());
    if (s.find_first_of(".eni") == std::string::npos) s += ".";
    return s;
  }
  return to_string(v);
}

}  // namespace

std::string show(const KernelExpr& e) {
  using T = KernelExpr::Tag;
  auto kid = [&](std::size_t i) { return show(*e.kids.at(i)); };
  auto tuple_kids = [&](const KernelExpr& t) {
    std::vector<std::string> parts;
    if (t.tag == T::Pair)
      for (const auto& k : t.kids) parts.push_back(show(*k));
    else
      parts.push_back(show(t));
    return parts;
  };
  switch (e.tag) {
    case T::Const: return show_const(e.literal);
    case T::Var: return e.name;
    case T::Pair: {
      std::string s = "(";
      for (std::size_t i = 0; i < e.kids.size(); ++i) s += (i ? ", " : "") + kid(i);
      return s + ")";
    }
    case T::OpApp: {
      auto parts = tuple_kids(*e.kids[0]);
      if (e.name == "if" && parts.size() == 3) return "(if " + parts[0] + " then " + parts[1] + " else " + parts[2] + ")";
      if (is_infix(e.name) && parts.size() == 2) return "(" + parts[0] + " " + e.name + " " + parts[1] + ")";
      if (e.name == "~-") return "(-" + parts[0] + ")";
      return e.name + " " + (e.kids[0]->tag == T::Pair ? kid(0) : "(" + kid(0) + ")");
    }
    case T::Call:
    case T::Apply: return e.name + " " + (e.kids[0]->tag == T::Pair ? kid(0) : "(" + kid(0) + ")");
    case T::Last: return "last " + e.name;
    case T::WhereRec: {
      std::string s = "(" + kid(0) + " where rec ";
      bool first = true;
      for (const auto& i : e.inits) {
        s += (first ? "" : " and ") + std::string("init ") + i.name + " = " + show(*i.value);
        first = false;
      }
      for (const auto& q : e.eqs) {
        s += (first ? "" : " and ") + q.lhs.str() + " = " + show(*q.rhs);
        first = false;
      }
      return s + ")";
    }
    case T::Present: return "(present " + kid(0) + " -> " + kid(1) + " else " + kid(2) + ")";
    case T::Reset: return "(reset " + kid(0) + " every " + kid(1) + ")";
    case T::Sample: return "sample (" + kid(0) + ")";
    case T::Observe: return "observe (" + kid(0) + ", " + kid(1) + ")";
    case T::Factor: return "factor (" + kid(0) + ")";
    case T::Infer: return "infer " + std::to_string(e.particles) + " (" + kid(0) + ")";
    case T::Pre: return "pre (" + kid(0) + ")";
    case T::Arrow: return "(" + kid(0) + " -> " + kid(1) + ")";
    case T::If: return "(if " + kid(0) + " then " + kid(1) + " else " + kid(2) + ")";
  }
  return "?";
}

std::string show(const KernelProgram& p) {
  std::string s;
  for (const auto& d : p.decls)
    s += "let " + std::string(d.proba ? "proba " : "node ") + d.name + " " + d.param.str() + " = " + show(*d.body) + "\n";
  return s;
}

}  // namespace rpz
