#include "rpz/ops.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "rpz/distribution.hpp"

namespace rpz {

namespace {

using Args = std::vector<TypePtr>;

[[noreturn]] void eval_fail(const std::string& msg) { throw Error(ErrorKind::Eval, msg); }

Value arith(char op, const Value& a, const Value& b) {
  if (a.is_int() && b.is_int()) {
    std::int64_t x = a.as_int(), y = b.as_int();
    switch (op) {
      case '+': return Value::integer(x + y);
      case '-': return Value::integer(x - y);
      case '*': return Value::integer(x * y);
      case '/':
        if (y == 0) eval_fail("integer division by zero");
        return Value::integer(x / y);
    }
  }
  if (a.is_vector() || b.is_vector()) {
    if (a.is_vector() && b.is_vector()) {
      if (op == '+') return Value::vector(a.as_vector() + b.as_vector());
      if (op == '-') return Value::vector(a.as_vector() - b.as_vector());
    }
    if (op == '*' && a.is_vector() && b.is_number()) return Value::vector(a.as_vector() * b.as_float());
    if (op == '*' && b.is_vector() && a.is_number()) return Value::vector(b.as_vector() * a.as_float());
    if (op == '/' && a.is_vector() && b.is_number()) return Value::vector(a.as_vector() / b.as_float());
    eval_fail(std::string("unsupported vector operation ") + op);
  }
  double x = a.as_float(), y = b.as_float();
  switch (op) {
    case '+': return Value::real(x + y);
    case '-': return Value::real(x - y);
    case '*': return Value::real(x * y);
    default: return Value::real(x / y);
  }
}

Value compare(const std::string& op, const Value& a, const Value& b) {
  if (op == "=") return Value::boolean(value_equal(a, b) || (a.is_number() && b.is_number() && a.as_float() == b.as_float()));
  if (op == "<>") return Value::boolean(!(value_equal(a, b) || (a.is_number() && b.is_number() && a.as_float() == b.as_float())));
  if (a.is_bool() && b.is_bool()) {
    bool x = a.as_bool(), y = b.as_bool();
    if (op == "<") return Value::boolean(x < y);
    if (op == ">") return Value::boolean(x > y);
    if (op == "<=") return Value::boolean(x <= y);
    return Value::boolean(x >= y);
  }
  double x = a.as_float(), y = b.as_float();
  if (op == "<") return Value::boolean(x < y);
  if (op == ">") return Value::boolean(x > y);
  if (op == "<=") return Value::boolean(x <= y);
  return Value::boolean(x >= y);
}

TypePtr numeric_binop(Unifier& u, const Args& a) {
  TypePtr t = type_var(true);
  u.unify(t, a[0]);
  u.unify(t, a[1]);
  return t;
}

TypePtr float_binop(Unifier& u, const Args& a) {
  u.unify(type_float(), a[0]);
  u.unify(type_float(), a[1]);
  return type_float();
}

TypePtr float_fn(Unifier& u, const Args& a) {
  u.unify(type_float(), a[0]);
  return type_float();
}

struct Registry {
  std::mutex mu;
  std::map<std::string, std::unique_ptr<Op>> ops;
};

Registry& registry();

void add(Registry& r, Op op) {
  auto name = op.name;
  r.ops[name] = std::make_unique<Op>(std::move(op));
}

void add_arith(Registry& r, const std::string& name, char c, bool dotted) {
  add(r, Op{name, 2, SymMode::Linear,
            [c](const Value& v) { return arith(c, v.at(0), v.at(1)); },
            dotted ? std::function<TypePtr(Unifier&, const Args&)>(float_binop)
                   : std::function<TypePtr(Unifier&, const Args&)>(numeric_binop)});
}

void add_compare(Registry& r, const std::string& name) {
  add(r, Op{name, 2, SymMode::Lazy, [name](const Value& v) { return compare(name, v.at(0), v.at(1)); },
            [](Unifier& u, const Args& a) {
              u.unify(a[0], a[1]);
              return type_bool();
            }});
}

void add_float_fn(Registry& r, const std::string& name, double (*f)(double)) {
  add(r, Op{name, 1, SymMode::Lazy, [f](const Value& v) { return Value::real(f(v.as_float())); }, float_fn});
}

Value mean_value(const Value& v) { return mean(*v.as_dist()); }

TypePtr dist_elem(Unifier& u, const TypePtr& d) {
  TypePtr t = type_var();
  u.unify(type_dist(t, std::make_shared<DensityFlag>()), d);
  return t;
}

void build(Registry& r) {
  add_arith(r, "+", '+', false);
  add_arith(r, "-", '-', false);
  add_arith(r, "*", '*', false);
  add_arith(r, "/", '/', false);
  add_arith(r, "+.", '+', true);
  add_arith(r, "-.", '-', true);
  add_arith(r, "*.", '*', true);
  add_arith(r, "/.", '/', true);
  add(r, Op{"~-", 1, SymMode::Linear,
            [](const Value& v) {
              if (v.is_int()) return Value::integer(-v.as_int());
              if (v.is_vector()) return Value::vector(-v.as_vector());
              return Value::real(-v.as_float());
            },
            [](Unifier& u, const Args& a) {
              TypePtr t = type_var(true);
              u.unify(t, a[0]);
              return t;
            }});
  for (const char* c : {"=", "<>", "<", ">", "<=", ">="}) add_compare(r, c);
  add(r, Op{"&&", 2, SymMode::Lazy, [](const Value& v) { return Value::boolean(v.at(0).as_bool() && v.at(1).as_bool()); },
            [](Unifier& u, const Args& a) {
              u.unify(type_bool(), a[0]);
              u.unify(type_bool(), a[1]);
              return type_bool();
            }});
  add(r, Op{"||", 2, SymMode::Lazy, [](const Value& v) { return Value::boolean(v.at(0).as_bool() || v.at(1).as_bool()); },
            [](Unifier& u, const Args& a) {
              u.unify(type_bool(), a[0]);
              u.unify(type_bool(), a[1]);
              return type_bool();
            }});
  add(r, Op{"not", 1, SymMode::Lazy, [](const Value& v) { return Value::boolean(!v.as_bool()); },
            [](Unifier& u, const Args& a) {
              u.unify(type_bool(), a[0]);
              return type_bool();
            }});
  // Strict conditional: every branch has already been evaluated.
  add(r, Op{"if", 3, SymMode::Structural, [](const Value& v) { return v.at(0).as_bool() ? v.at(1) : v.at(2); },
            [](Unifier& u, const Args& a) {
              u.unify(type_bool(), a[0]);
              u.unify(a[1], a[2]);
              return a[1];
            }});
  add(r, Op{"min", 2, SymMode::Lazy,
            [](const Value& v) {
              if (v.at(0).is_int() && v.at(1).is_int()) return Value::integer(std::min(v.at(0).as_int(), v.at(1).as_int()));
              return Value::real(std::min(v.at(0).as_float(), v.at(1).as_float()));
            },
            numeric_binop});
  add(r, Op{"max", 2, SymMode::Lazy,
            [](const Value& v) {
              if (v.at(0).is_int() && v.at(1).is_int()) return Value::integer(std::max(v.at(0).as_int(), v.at(1).as_int()));
              return Value::real(std::max(v.at(0).as_float(), v.at(1).as_float()));
            },
            numeric_binop});
  add(r, Op{"abs", 1, SymMode::Lazy,
            [](const Value& v) {
              if (v.is_int()) return Value::integer(v.as_int() < 0 ? -v.as_int() : v.as_int());
              return Value::real(std::fabs(v.as_float()));
            },
            [](Unifier& u, const Args& a) {
              TypePtr t = type_var(true);
              u.unify(t, a[0]);
              return t;
            }});
  add_float_fn(r, "exp", [](double x) { return std::exp(x); });
  add_float_fn(r, "log", [](double x) { return std::log(x); });
  add_float_fn(r, "sqrt", [](double x) { return std::sqrt(x); });
  add(r, Op{"pow", 2, SymMode::Lazy, [](const Value& v) { return Value::real(std::pow(v.at(0).as_float(), v.at(1).as_float())); },
            float_binop});
  add(r, Op{"float_of_int", 1, SymMode::Lazy, [](const Value& v) { return Value::real(v.as_float()); },
            [](Unifier& u, const Args& a) {
              u.unify(type_int(), a[0]);
              return type_float();
            }});
  add(r, Op{"int_of_float", 1, SymMode::Lazy,
            [](const Value& v) { return Value::integer(static_cast<std::int64_t>(std::trunc(v.as_float()))); },
            [](Unifier& u, const Args& a) {
              u.unify(type_float(), a[0]);
              return type_int();
            }});
  add(r, Op{"fst", 1, SymMode::Structural, [](const Value& v) { return v.at(0); },
            [](Unifier& u, const Args& a) {
              TypePtr x = type_var(), y = type_var();
              u.unify(type_pair(x, y), a[0]);
              return x;
            }});
  add(r, Op{"snd", 1, SymMode::Structural, [](const Value& v) { return v.at(1); },
            [](Unifier& u, const Args& a) {
              TypePtr x = type_var(), y = type_var();
              u.unify(type_pair(x, y), a[0]);
              return y;
            }});
  // Indexing into a homogeneous tuple.
  add(r, Op{"get", 2, SymMode::Structural,
            [](const Value& v) {
              const auto& t = v.at(0).as_tuple();
              std::int64_t i = v.at(1).as_int();
              if (i < 0 || static_cast<std::size_t>(i) >= t.size()) eval_fail("get: index out of range");
              return t[static_cast<std::size_t>(i)];
            },
            [](Unifier& u, const Args& a) {
              u.unify(type_int(), a[1]);
              TypePtr tup = resolve(a[0]);
              TypePtr elem = type_var();
              if (tup->tag != TypeExpr::Tag::Pair) throw Error(ErrorKind::Type, "get expects a tuple of known arity");
              for (const auto& c : tup->args) u.unify(elem, c);
              return elem;
            }});

  add(r, Op{"gaussian", 2, SymMode::DistCtor,
            [](const Value& v) { return Value::dist(make_gaussian(v.at(0).as_float(), v.at(1).as_float())); },
            [](Unifier& u, const Args& a) {
              u.unify(type_float(), a[0]);
              u.unify(type_float(), a[1]);
              return type_density(type_float());
            }});
  add(r, Op{"beta", 2, SymMode::DistCtor,
            [](const Value& v) { return Value::dist(make_beta(v.at(0).as_float(), v.at(1).as_float())); },
            [](Unifier& u, const Args& a) {
              u.unify(type_float(), a[0]);
              u.unify(type_float(), a[1]);
              return type_density(type_float());
            }});
  add(r, Op{"bernoulli", 1, SymMode::DistCtor, [](const Value& v) { return Value::dist(make_bernoulli(v.as_float())); },
            [](Unifier& u, const Args& a) {
              u.unify(type_float(), a[0]);
              return type_density(type_bool());
            }});
  add(r, Op{"poisson", 1, SymMode::DistCtor, [](const Value& v) { return Value::dist(make_poisson(v.as_float())); },
            [](Unifier& u, const Args& a) {
              u.unify(type_float(), a[0]);
              return type_density(type_int());
            }});
  add(r, Op{"mv_gaussian", 2, SymMode::DistCtor,
            [](const Value& v) { return Value::dist(make_mv_gaussian(v.at(0).as_vector(), v.at(1).as_matrix())); },
            [](Unifier& u, const Args& a) {
              u.unify(type_vector(), a[0]);
              u.unify(type_matrix(), a[1]);
              return type_density(type_vector());
            }});
  add(r, Op{"dirac", 1, SymMode::DistCtor, [](const Value& v) { return Value::dist(make_dirac(v)); },
            [](Unifier&, const Args& a) { return type_sampler(a[0]); }});
  add(r, Op{"mean", 1, SymMode::Force, mean_value,
            [](Unifier& u, const Args& a) {
              TypePtr t = resolve(dist_elem(u, a[0]));
              if (t->tag == TypeExpr::Tag::Bool || t->tag == TypeExpr::Tag::Int) return type_float();
              return t;
            }});
  add(r, Op{"variance", 1, SymMode::Force, [](const Value& v) { return variance(*v.as_dist()); },
            [](Unifier& u, const Args& a) {
              TypePtr t = resolve(dist_elem(u, a[0]));
              if (t->tag == TypeExpr::Tag::Vector) return type_matrix();
              if (t->tag == TypeExpr::Tag::Var) return type_var();
              return type_float();
            }});
  // Forces symbolic values under delayed sampling; identity otherwise.
  add(r, Op{"eval", 1, SymMode::Force, [](const Value& v) { return v; },
            [](Unifier&, const Args& a) { return a[0]; }});

  add(r, Op{"+@", 2, SymMode::Linear, [](const Value& v) { return Value::vector(v.at(0).as_vector() + v.at(1).as_vector()); },
            [](Unifier& u, const Args& a) {
              u.unify(type_vector(), a[0]);
              u.unify(type_vector(), a[1]);
              return type_vector();
            }});
  add(r, Op{"-@", 2, SymMode::Linear, [](const Value& v) { return Value::vector(v.at(0).as_vector() - v.at(1).as_vector()); },
            [](Unifier& u, const Args& a) {
              u.unify(type_vector(), a[0]);
              u.unify(type_vector(), a[1]);
              return type_vector();
            }});
  add(r, Op{"*@", 2, SymMode::Linear,
            [](const Value& v) {
              const auto& m = v.at(0).as_matrix();
              if (v.at(1).is_matrix()) return Value::matrix(m * v.at(1).as_matrix());
              const auto& x = v.at(1).as_vector();
              if (m.cols() != x.size()) eval_fail("*@: dimension mismatch");
              return Value::vector(m * x);
            },
            [](Unifier& u, const Args& a) {
              u.unify(type_matrix(), a[0]);
              u.unify(type_vector(), a[1]);
              return type_vector();
            }});
  add(r, Op{"vec_get", 2, SymMode::Linear,
            [](const Value& v) {
              const auto& x = v.at(0).as_vector();
              std::int64_t i = v.at(1).as_int();
              if (i < 0 || i >= x.size()) eval_fail("vec_get: index out of range");
              return Value::real(x[i]);
            },
            [](Unifier& u, const Args& a) {
              u.unify(type_vector(), a[0]);
              u.unify(type_int(), a[1]);
              return type_float();
            }});
  add(r, Op{"vec3", 3, SymMode::Lazy,
            [](const Value& v) { return Value::vector(Eigen::Vector3d(v.at(0).as_float(), v.at(1).as_float(), v.at(2).as_float())); },
            [](Unifier& u, const Args& a) {
              for (const auto& t : a) u.unify(type_float(), t);
              return type_vector();
            }});
  add(r, Op{"vec1", 1, SymMode::Lazy, [](const Value& v) { return Value::vector(Eigen::VectorXd::Constant(1, v.as_float())); },
            [](Unifier& u, const Args& a) {
              u.unify(type_float(), a[0]);
              return type_vector();
            }});
}

Registry& registry() {
  static Registry r;
  static std::once_flag once;
  std::call_once(once, [] { build(r); });
  return r;
}

}  // namespace

const Op* find_op(const std::string& name) {
  auto& r = registry();
  std::lock_guard<std::mutex> lock(r.mu);
  auto it = r.ops.find(name);
  if (it != r.ops.end()) return it->second.get();
  // Tuple projections introduced by desugaring: proj@i@n.
  if (name.rfind("proj@", 0) == 0) {
    auto at = name.find('@', 5);
    if (at == std::string::npos) return nullptr;
    std::size_t i = std::stoul(name.substr(5, at - 5));
    std::size_t n = std::stoul(name.substr(at + 1));
    if (i >= n) return nullptr;
    auto op = std::make_unique<Op>(Op{name, 1, SymMode::Structural, [i](const Value& v) { return v.at(i); },
                                      [i, n](Unifier& u, const Args& a) {
                                        std::vector<TypePtr> items;
                                        for (std::size_t k = 0; k < n; ++k) items.push_back(type_var());
                                        TypePtr t = items[i];
                                        u.unify(type_tuple(std::move(items)), a[0]);
                                        return t;
                                      }});
    const Op* p = op.get();
    r.ops[name] = std::move(op);
    return p;
  }
  return nullptr;
}

void register_op(Op op) {
  auto& r = registry();
  std::lock_guard<std::mutex> lock(r.mu);
  auto it = r.ops.find(op.name);
  if (it != r.ops.end()) {
    // Keep the address stable: compiled terms hold Op pointers.
    *it->second = std::move(op);
    return;
  }
  auto name = op.name;
  r.ops[name] = std::make_unique<Op>(std::move(op));
}

std::vector<Value> unpack(const Op& op, const Value& arg) {
  if (op.arity == 1) return {arg};
  if (op.arity == 0) return {};
  if (!arg.is_tuple() || arg.arity() != static_cast<std::size_t>(op.arity))
    throw Error(ErrorKind::Eval, op.name + " expects " + std::to_string(op.arity) + " arguments");
  return arg.as_tuple();
}

Value apply_op(const Op& op, const Value& arg) {
  if (op.sym_mode == SymMode::Structural) {
    if (op.arity > 1 && arg.is_tuple() && !arg.as_tuple().empty() && arg.at(0).is_nil() && op.name == "if")
      return Value::nil();
    if (arg.is_nil()) return Value::nil();
    return op.apply(arg);
  }
  if (contains_nil(arg)) return Value::nil();
  return op.apply(arg);
}

}  // namespace rpz
