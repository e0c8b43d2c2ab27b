#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "rpz/error.hpp"

namespace rpz {

class Distribution;
struct SymExpr;
class InferCell;
class Value;

using DistPtr = std::shared_ptr<const Distribution>;
using SymPtr = std::shared_ptr<const SymExpr>;
using CellPtr = std::shared_ptr<InferCell>;
using VecPtr = std::shared_ptr<const Eigen::VectorXd>;
using MatPtr = std::shared_ptr<const Eigen::MatrixXd>;
using Tuple = std::vector<Value>;
using TuplePtr = std::shared_ptr<const Tuple>;

struct UnitTag {};
// Placeholder stored by `pre` before the first write; absorbed by operators.
struct NilTag {};

// Runtime value universe shared by program values and transition-function states.
class Value {
 public:
  enum class Kind { Unit, Nil, Bool, Int, Float, Vector, Matrix, Tuple, Dist, Sym, Cell };

  Value() : v_(UnitTag{}) {}

  static Value unit() { return Value(); }
  static Value nil() { return Value(NilTag{}); }
  static Value boolean(bool b) { return Value(b); }
  static Value integer(std::int64_t i) { return Value(i); }
  static Value real(double d) { return Value(d); }
  static Value vector(Eigen::VectorXd v) { return Value(std::make_shared<const Eigen::VectorXd>(std::move(v))); }
  static Value matrix(Eigen::MatrixXd m) { return Value(std::make_shared<const Eigen::MatrixXd>(std::move(m))); }
  static Value tuple(Tuple items) { return Value(std::make_shared<const Tuple>(std::move(items))); }
  static Value pair(Value a, Value b) { return tuple(Tuple{std::move(a), std::move(b)}); }
  static Value dist(DistPtr d) { return Value(std::move(d)); }
  static Value sym(SymPtr s) { return Value(std::move(s)); }
  static Value cell(CellPtr c) { return Value(std::move(c)); }

  Kind kind() const { return static_cast<Kind>(v_.index()); }
  bool is_unit() const { return kind() == Kind::Unit; }
  bool is_nil() const { return kind() == Kind::Nil; }
  bool is_bool() const { return kind() == Kind::Bool; }
  bool is_int() const { return kind() == Kind::Int; }
  bool is_float() const { return kind() == Kind::Float; }
  bool is_number() const { return is_int() || is_float(); }
  bool is_vector() const { return kind() == Kind::Vector; }
  bool is_matrix() const { return kind() == Kind::Matrix; }
  bool is_tuple() const { return kind() == Kind::Tuple; }
  bool is_dist() const { return kind() == Kind::Dist; }
  bool is_sym() const { return kind() == Kind::Sym; }
  bool is_cell() const { return kind() == Kind::Cell; }

  bool as_bool() const;
  std::int64_t as_int() const;
  // Numeric coercion: ints and booleans widen to double.
  double as_float() const;
  const Eigen::VectorXd& as_vector() const;
  const Eigen::MatrixXd& as_matrix() const;
  const Tuple& as_tuple() const;
  const DistPtr& as_dist() const;
  const SymPtr& as_sym() const;
  const CellPtr& as_cell() const;

  std::size_t arity() const { return is_tuple() ? as_tuple().size() : 0; }
  const Value& at(std::size_t i) const { return as_tuple().at(i); }

 private:
  explicit Value(UnitTag u) : v_(u) {}
  explicit Value(NilTag n) : v_(n) {}
  explicit Value(bool b) : v_(b) {}
  explicit Value(std::int64_t i) : v_(i) {}
  explicit Value(double d) : v_(d) {}
  explicit Value(VecPtr v) : v_(std::move(v)) {}
  explicit Value(MatPtr m) : v_(std::move(m)) {}
  explicit Value(TuplePtr t) : v_(std::move(t)) {}
  explicit Value(DistPtr d) : v_(std::move(d)) {}
  explicit Value(SymPtr s) : v_(std::move(s)) {}
  explicit Value(CellPtr c) : v_(std::move(c)) {}

  std::variant<UnitTag, NilTag, bool, std::int64_t, double, VecPtr, MatPtr, TuplePtr, DistPtr, SymPtr, CellPtr> v_;
};

const char* kind_name(Value::Kind k);

// 17 significant digits, shortest form that round-trips.
std::string format_double(double d);
std::string to_string(const Value& v);

// Structural equality; doubles compare exactly.
bool value_equal(const Value& a, const Value& b);
// Total order on concrete values, used to canonicalize discrete supports.
bool value_less(const Value& a, const Value& b);

// True if any leaf is symbolic.
bool contains_sym(const Value& v);
bool contains_nil(const Value& v);

// Numeric leaves in depth-first order; booleans map to 0/1.
void flatten(const Value& v, std::vector<double>& out);
std::vector<double> flatten(const Value& v);
// Rebuilds a value shaped like `shape` from numbers; booleans and ints become floats.
Value unflatten_like(const Value& shape, const double*& it);

// Counts tuple and leaf nodes of a state tree (memory proxy for non-graph state).
std::size_t tree_size(const Value& v);

// Same tree skeleton (tuple arities, nesting); leaves may differ.
bool same_skeleton(const Value& a, const Value& b);

}  // namespace rpz
