#include "rpz/muf.hpp"

#include <deque>
#include <mutex>
#include <unordered_map>

namespace rpz {

namespace {

struct SymbolTable {
  std::mutex mu;
  std::deque<std::string> names;
  std::unordered_map<std::string, int> ids;
};

SymbolTable& symbols() {
  static SymbolTable t;
  return t;
}

MPtr make(MufTerm::Tag tag, std::vector<MPtr> kids = {}) {
  auto t = std::make_shared<MufTerm>();
  t->tag = tag;
  t->kids = std::move(kids);
  return t;
}

}  // namespace

int intern(const std::string& name) {
  auto& t = symbols();
  std::lock_guard<std::mutex> lock(t.mu);
  auto it = t.ids.find(name);
  if (it != t.ids.end()) return it->second;
  int id = static_cast<int>(t.names.size());
  t.names.push_back(name);
  t.ids[name] = id;
  return id;
}

const std::string& symbol_name(int id) {
  auto& t = symbols();
  std::lock_guard<std::mutex> lock(t.mu);
  return t.names.at(static_cast<std::size_t>(id));
}

std::string MPattern::str() const {
  switch (tag) {
    case Tag::Name: return symbol_name(sym);
    case Tag::Wild: return "_";
    case Tag::Tuple: {
      std::string s = "(";
      for (std::size_t i = 0; i < items.size(); ++i) s += (i ? ", " : "") + items[i].str();
      return s + ")";
    }
  }
  return "?";
}

MPtr m_const(Value v) {
  auto t = std::make_shared<MufTerm>();
  t->tag = MufTerm::Tag::Const;
  t->literal = std::move(v);
  return t;
}
MPtr m_var(const std::string& n) { return m_var(intern(n)); }
MPtr m_var(int sym) {
  auto t = std::make_shared<MufTerm>();
  t->tag = MufTerm::Tag::Var;
  t->sym = sym;
  return t;
}
MPtr m_tuple(std::vector<MPtr> items) { return make(MufTerm::Tag::Tuple, std::move(items)); }
MPtr m_op(const Op* op, MPtr arg) {
  auto t = std::make_shared<MufTerm>();
  t->tag = MufTerm::Tag::Op;
  t->op = op;
  t->kids = {std::move(arg)};
  return t;
}
MPtr m_app(MPtr fn, MPtr arg) { return make(MufTerm::Tag::App, {std::move(fn), std::move(arg)}); }
MPtr m_global(int decl_index) {
  auto t = std::make_shared<MufTerm>();
  t->tag = MufTerm::Tag::Global;
  t->sym = decl_index;
  return t;
}
MPtr m_if(MPtr c, MPtr a, MPtr b) { return make(MufTerm::Tag::If, {std::move(c), std::move(a), std::move(b)}); }
MPtr m_let(MPattern p, MPtr bound, MPtr body) {
  auto t = std::make_shared<MufTerm>();
  t->tag = MufTerm::Tag::Let;
  t->pat = std::move(p);
  t->kids = {std::move(bound), std::move(body)};
  return t;
}
MPtr m_fun(MPattern p, MPtr body) {
  auto t = std::make_shared<MufTerm>();
  t->tag = MufTerm::Tag::Fun;
  t->pat = std::move(p);
  t->kids = {std::move(body)};
  return t;
}
MPtr m_sample(MPtr d) { return make(MufTerm::Tag::Sample, {std::move(d)}); }
MPtr m_observe(MPtr d, MPtr v) { return make(MufTerm::Tag::Observe, {std::move(d), std::move(v)}); }
MPtr m_factor(MPtr w) { return make(MufTerm::Tag::Factor, {std::move(w)}); }
MPtr m_infer(long particles, MPtr fn, MPtr state) {
  auto t = std::make_shared<MufTerm>();
  t->tag = MufTerm::Tag::Infer;
  t->particles = particles;
  t->kids = {std::move(fn), std::move(state)};
  return t;
}
MPtr m_copy(MPtr s) { return make(MufTerm::Tag::Copy, {std::move(s)}); }

namespace {

bool infix(const std::string& n) {
  static const char* const ops[] = {"+",  "-",  "*",  "/",  "+.", "-.", "*.", "/.", "+@", "-@",
                                    "*@", "=",  "<>", "<",  ">",  "<=", ">=", "&&", "||"};
  for (const char* o : ops)
    if (n == o) return true;
  return false;
}

std::string literal_str(const Value& v) {
  if (v.is_float()) {
    std::string s = format_double(v.as_float());
    if (s.find_first_of(".eni") == std::string::npos) s += ".";
    return s;
  }
  if (v.is_tuple()) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.arity(); ++i) s += (i ? ", " : "") + literal_str(v.at(i));
    return s + ")";
  }
  return to_string(v);
}

void print_rec(const MPtr& t, const std::vector<std::string>& globals, int indent, std::string& out) {
  using Tg = MufTerm::Tag;
  auto nl = [&](int ind) {
    out += "\n";
    out.append(static_cast<std::size_t>(ind) * 2, ' ');
  };
  switch (t->tag) {
    case Tg::Const: out += literal_str(t->literal); return;
    case Tg::Var: out += symbol_name(t->sym); return;
    case Tg::Tuple:
      out += "(";
      for (std::size_t i = 0; i < t->kids.size(); ++i) {
        if (i) out += ", ";
        print_rec(t->kids[i], globals, indent, out);
      }
      out += ")";
      return;
    case Tg::Op: {
      const MPtr& a = t->kids[0];
      if (infix(t->op->name) && a->tag == Tg::Tuple && a->kids.size() == 2) {
        out += "(";
        print_rec(a->kids[0], globals, indent, out);
        out += " " + t->op->name + " ";
        print_rec(a->kids[1], globals, indent, out);
        out += ")";
        return;
      }
      out += t->op->name + "(";
      if (a->tag == Tg::Tuple) {
        for (std::size_t i = 0; i < a->kids.size(); ++i) {
          if (i) out += ", ";
          print_rec(a->kids[i], globals, indent, out);
        }
      } else {
        print_rec(a, globals, indent, out);
      }
      out += ")";
      return;
    }
    case Tg::App:
      out += "(";
      print_rec(t->kids[0], globals, indent, out);
      out += ") (";
      print_rec(t->kids[1], globals, indent, out);
      out += ")";
      return;
    case Tg::Global:
      if (t->sym >= 0 && static_cast<std::size_t>(t->sym) < globals.size())
        out += globals[static_cast<std::size_t>(t->sym)] + "_step";
      else
        out += "global#" + std::to_string(t->sym) + "_step";
      return;
    case Tg::If:
      out += "if ";
      print_rec(t->kids[0], globals, indent, out);
      out += " then";
      nl(indent + 1);
      print_rec(t->kids[1], globals, indent + 1, out);
      nl(indent);
      out += "else";
      nl(indent + 1);
      print_rec(t->kids[2], globals, indent + 1, out);
      return;
    case Tg::Let:
      out += "let " + t->pat.str() + " =";
      nl(indent + 1);
      print_rec(t->kids[0], globals, indent + 1, out);
      out += " in";
      nl(indent);
      print_rec(t->kids[1], globals, indent, out);
      return;
    case Tg::Fun:
      out += "fun " + t->pat.str() + " ->";
      nl(indent + 1);
      print_rec(t->kids[0], globals, indent + 1, out);
      return;
    case Tg::Sample:
    case Tg::Factor:
    case Tg::Copy:
      out += t->tag == Tg::Sample ? "sample(" : t->tag == Tg::Factor ? "factor(" : "copy(";
      print_rec(t->kids[0], globals, indent, out);
      out += ")";
      return;
    case Tg::Observe:
      out += "observe(";
      print_rec(t->kids[0], globals, indent, out);
      out += ", ";
      print_rec(t->kids[1], globals, indent, out);
      out += ")";
      return;
    case Tg::Infer:
      out += "infer " + std::to_string(t->particles) + " (";
      print_rec(t->kids[0], globals, indent + 1, out);
      out += ", ";
      print_rec(t->kids[1], globals, indent, out);
      out += ")";
      return;
  }
}

}  // namespace

std::string print(const MPtr& t, const std::vector<std::string>& globals) {
  std::string out;
  print_rec(t, globals, 0, out);
  return out;
}

std::size_t term_size(const MPtr& t) {
  std::size_t n = 1;
  for (const auto& k : t->kids) n += term_size(k);
  return n;
}

}  // namespace rpz
