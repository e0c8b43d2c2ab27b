#include "rpz/value.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "rpz/distribution.hpp"
#include "rpz/ds.hpp"

namespace rpz {

const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Syntax: return "syntax";
    case ErrorKind::Name: return "name";
    case ErrorKind::Kind: return "kind";
    case ErrorKind::Type: return "type";
    case ErrorKind::Schedule: return "schedule";
    case ErrorKind::Eval: return "evaluation";
    case ErrorKind::Density: return "density";
    case ErrorKind::Degenerate: return "degenerate-cloud";
    case ErrorKind::Budget: return "budget";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

const char* kind_name(Value::Kind k) {
  switch (k) {
    case Value::Kind::Unit: return "unit";
    case Value::Kind::Nil: return "nil";
    case Value::Kind::Bool: return "bool";
    case Value::Kind::Int: return "int";
    case Value::Kind::Float: return "float";
    case Value::Kind::Vector: return "vector";
    case Value::Kind::Matrix: return "matrix";
    case Value::Kind::Tuple: return "tuple";
    case Value::Kind::Dist: return "dist";
    case Value::Kind::Sym: return "symbolic";
    case Value::Kind::Cell: return "infer-cell";
  }
  return "?";
}

namespace {

[[noreturn]] void bad_kind(const char* want, const Value& v) {
  throw Error(ErrorKind::Eval, std::string("expected ") + want + ", found " + kind_name(v.kind()));
}

}  // namespace

bool Value::as_bool() const {
  if (auto p = std::get_if<bool>(&v_)) return *p;
  bad_kind("bool", *this);
}

std::int64_t Value::as_int() const {
  if (auto p = std::get_if<std::int64_t>(&v_)) return *p;
  if (auto p = std::get_if<double>(&v_)) {
    double r = std::nearbyint(*p);
    if (r == *p) return static_cast<std::int64_t>(r);
  }
  bad_kind("int", *this);
}

double Value::as_float() const {
  if (auto p = std::get_if<double>(&v_)) return *p;
  if (auto p = std::get_if<std::int64_t>(&v_)) return static_cast<double>(*p);
  if (auto p = std::get_if<bool>(&v_)) return *p ? 1.0 : 0.0;
  bad_kind("float", *this);
}

const Eigen::VectorXd& Value::as_vector() const {
  if (auto p = std::get_if<VecPtr>(&v_)) return **p;
  bad_kind("vector", *this);
}

const Eigen::MatrixXd& Value::as_matrix() const {
  if (auto p = std::get_if<MatPtr>(&v_)) return **p;
  bad_kind("matrix", *this);
}

const Tuple& Value::as_tuple() const {
  if (auto p = std::get_if<TuplePtr>(&v_)) return **p;
  bad_kind("tuple", *this);
}

const DistPtr& Value::as_dist() const {
  if (auto p = std::get_if<DistPtr>(&v_)) return *p;
  bad_kind("distribution", *this);
}

const SymPtr& Value::as_sym() const {
  if (auto p = std::get_if<SymPtr>(&v_)) return *p;
  bad_kind("symbolic term", *this);
}

const CellPtr& Value::as_cell() const {
  if (auto p = std::get_if<CellPtr>(&v_)) return *p;
  bad_kind("inference cell", *this);
}

std::string format_double(double d) {
  if (std::isnan(d)) return "nan";
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

std::string to_string(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::Unit: return "()";
    case Value::Kind::Nil: return "nil";
    case Value::Kind::Bool: return v.as_bool() ? "true" : "false";
    case Value::Kind::Int: return std::to_string(v.as_int());
    case Value::Kind::Float: return format_double(v.as_float());
    case Value::Kind::Vector: {
      std::string s = "[";
      const auto& x = v.as_vector();
      for (Eigen::Index i = 0; i < x.size(); ++i) s += (i ? "; " : "") + format_double(x[i]);
      return s + "]";
    }
    case Value::Kind::Matrix: {
      std::string s = "[";
      const auto& m = v.as_matrix();
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        s += r ? " | " : "";
        for (Eigen::Index c = 0; c < m.cols(); ++c) s += (c ? "; " : "") + format_double(m(r, c));
      }
      return s + "]";
    }
    case Value::Kind::Tuple: {
      std::string s = "(";
      const auto& t = v.as_tuple();
      for (std::size_t i = 0; i < t.size(); ++i) s += (i ? ", " : "") + to_string(t[i]);
      return s + ")";
    }
    case Value::Kind::Dist: return describe(*v.as_dist());
    case Value::Kind::Sym: return describe(*v.as_sym());
    case Value::Kind::Cell: return "<infer>";
  }
  return "?";
}

bool value_equal(const Value& a, const Value& b) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Value::Kind::Unit:
    case Value::Kind::Nil: return true;
    case Value::Kind::Bool: return a.as_bool() == b.as_bool();
    case Value::Kind::Int: return a.as_int() == b.as_int();
    case Value::Kind::Float: return a.as_float() == b.as_float();
    case Value::Kind::Vector: return a.as_vector() == b.as_vector();
    case Value::Kind::Matrix: return a.as_matrix() == b.as_matrix();
    case Value::Kind::Tuple: {
      const auto& x = a.as_tuple();
      const auto& y = b.as_tuple();
      if (x.size() != y.size()) return false;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (!value_equal(x[i], y[i])) return false;
      return true;
    }
    case Value::Kind::Dist: return a.as_dist() == b.as_dist();
    case Value::Kind::Sym: return a.as_sym() == b.as_sym();
    case Value::Kind::Cell: return a.as_cell() == b.as_cell();
  }
  return false;
}

bool value_less(const Value& a, const Value& b) {
  if (a.kind() != b.kind()) return a.kind() < b.kind();
  switch (a.kind()) {
    case Value::Kind::Unit:
    case Value::Kind::Nil: return false;
    case Value::Kind::Bool: return a.as_bool() < b.as_bool();
    case Value::Kind::Int: return a.as_int() < b.as_int();
    case Value::Kind::Float: return a.as_float() < b.as_float();
    case Value::Kind::Vector: {
      const auto& x = a.as_vector();
      const auto& y = b.as_vector();
      return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
    }
    case Value::Kind::Matrix: {
      const auto& x = a.as_matrix();
      const auto& y = b.as_matrix();
      return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
    }
    case Value::Kind::Tuple: {
      const auto& x = a.as_tuple();
      const auto& y = b.as_tuple();
      return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end(), value_less);
    }
    case Value::Kind::Dist: return a.as_dist().get() < b.as_dist().get();
    case Value::Kind::Sym: return a.as_sym().get() < b.as_sym().get();
    case Value::Kind::Cell: return a.as_cell().get() < b.as_cell().get();
  }
  return false;
}

bool contains_sym(const Value& v) {
  if (v.is_sym()) return true;
  if (v.is_tuple())
    for (const auto& x : v.as_tuple())
      if (contains_sym(x)) return true;
  return false;
}

bool contains_nil(const Value& v) {
  if (v.is_nil()) return true;
  if (v.is_tuple())
    for (const auto& x : v.as_tuple())
      if (contains_nil(x)) return true;
  return false;
}

void flatten(const Value& v, std::vector<double>& out) {
  switch (v.kind()) {
    case Value::Kind::Unit: return;
    case Value::Kind::Bool:
    case Value::Kind::Int:
    case Value::Kind::Float: out.push_back(v.as_float()); return;
    case Value::Kind::Vector: {
      const auto& x = v.as_vector();
      out.insert(out.end(), x.data(), x.data() + x.size());
      return;
    }
    case Value::Kind::Matrix: {
      const auto& m = v.as_matrix();
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
      return;
    }
    case Value::Kind::Tuple:
      for (const auto& x : v.as_tuple()) flatten(x, out);
      return;
    default:
      throw Error(ErrorKind::Eval, std::string("cannot summarize a ") + kind_name(v.kind()) + " value numerically");
  }
}

std::vector<double> flatten(const Value& v) {
  std::vector<double> out;
  flatten(v, out);
  return out;
}

Value unflatten_like(const Value& shape, const double*& it) {
  switch (shape.kind()) {
    case Value::Kind::Unit: return Value::unit();
    case Value::Kind::Bool:
    case Value::Kind::Int:
    case Value::Kind::Float: return Value::real(*it++);
    case Value::Kind::Vector: {
      Eigen::VectorXd x(shape.as_vector().size());
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = *it++;
      return Value::vector(std::move(x));
    }
    case Value::Kind::Matrix: {
      const auto& s = shape.as_matrix();
      Eigen::MatrixXd m(s.rows(), s.cols());
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = *it++;
      return Value::matrix(std::move(m));
    }
    case Value::Kind::Tuple: {
      Tuple t;
      for (const auto& x : shape.as_tuple()) t.push_back(unflatten_like(x, it));
      return Value::tuple(std::move(t));
    }
    default:
      throw Error(ErrorKind::Eval, std::string("cannot rebuild a ") + kind_name(shape.kind()) + " value");
  }
}

std::size_t tree_size(const Value& v) {
  if (!v.is_tuple()) return 1;
  std::size_t n = 1;
  for (const auto& x : v.as_tuple()) n += tree_size(x);
  return n;
}

bool same_skeleton(const Value& a, const Value& b) {
  if (a.is_nil() || b.is_nil()) return true;
  if (a.is_tuple() != b.is_tuple()) return false;
  if (!a.is_tuple()) return true;
  const auto& x = a.as_tuple();
  const auto& y = b.as_tuple();
  if (x.size() != y.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!same_skeleton(x[i], y[i])) return false;
  return true;
}

}  // namespace rpz
