#pragma once

#include <memory>
#include <string>
#include <vector>

namespace rpz {

enum class Kind { D, P };
inline Kind join(Kind a, Kind b) { return (a == Kind::P || b == Kind::P) ? Kind::P : Kind::D; }
inline const char* kind_str(Kind k) { return k == Kind::D ? "D" : "P"; }

// Whether a distribution type is known to have a density (`t dist`) or only
// supports sampling (`t dist*`). Shared cells let unification join flags.
struct DensityFlag {
  enum class State { Unknown, Density, Sampler };
  State state = State::Unknown;
  std::shared_ptr<DensityFlag> link;
};
using FlagPtr = std::shared_ptr<DensityFlag>;
FlagPtr flag_root(FlagPtr f);

struct TypeExpr;
using TypePtr = std::shared_ptr<TypeExpr>;

struct TypeExpr {
  enum class Tag { Var, Bool, Float, Int, Unit, Pair, Vector, Matrix, Dist, Fn };
  Tag tag = Tag::Var;
  // Var: binding once unified; `numeric` restricts it to int/float.
  TypePtr link;
  int var_id = 0;
  bool numeric = false;
  // Pair(a, b, ...), Dist(t), Fn(arg, ret).
  std::vector<TypePtr> args;
  FlagPtr flag;   // Dist
  Kind fn_kind = Kind::D;  // Fn
};

TypePtr type_var(bool numeric = false);
TypePtr type_bool();
TypePtr type_float();
TypePtr type_int();
TypePtr type_unit();
TypePtr type_vector();
TypePtr type_matrix();
TypePtr type_pair(TypePtr a, TypePtr b);
// n-ary product; arity 0 is unit, arity 1 is the item itself.
TypePtr type_tuple(std::vector<TypePtr> items);
TypePtr type_density(TypePtr t);
TypePtr type_sampler(TypePtr t);
TypePtr type_dist(TypePtr t, FlagPtr flag);
TypePtr type_fn(TypePtr arg, Kind k, TypePtr ret);

// Follows Var links.
TypePtr resolve(TypePtr t);
// `float dist*`, `(float * bool)`, `'a`, ...
std::string type_str(const TypePtr& t);

}  // namespace rpz
