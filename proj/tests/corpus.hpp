#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rpz/rng.hpp"
#include "rpz/value.hpp"

namespace rpz::testing {

// Deterministic programs for differential testing of the interpreter against
// compiled code. Every program defines `main`.
struct CorpusProgram {
  std::string name;
  std::string source;
  // Input shape of main: 'f' float, 'b' bool, 'i' int, 'u' unit, and tuples
  // of those written as "fb", "ff", ...
  std::string input;
};

inline const std::vector<CorpusProgram>& corpus() {
  static const std::vector<CorpusProgram> programs = {
      {"integr",
       "let h = 0.1\n"
       "let node integr (xo, x') = x where\n"
       "  rec x = xo -> (pre x + x' * h)\n"
       "let node main (xo, x') = integr (xo, x')\n",
       "ff"},
      {"present_vs_if",
       "let node cpt () = o where rec o = 0 -> pre o + 1\n"
       "let node present_vs_if (b) = (o1, o2) where\n"
       "  rec o1 = present (b) -> cpt () else 0\n"
       "  and o2 = if b then cpt () else 0\n"
       "let node main (b) = present_vs_if (b)\n",
       "b"},
      {"integr_kernel",
       "let h = 0.1\n"
       "let node main (xo, x') = x where\n"
       "  rec init first = true and init x = 0.\n"
       "  and first = false\n"
       "  and x = if last first then xo else last x + (x' * h)\n",
       "ff"},
      {"double_pre",
       "let node main (x) = 0. -> pre (1. -> pre x)\n",
       "f"},
      {"fibonacci",
       "let node main () = a where\n"
       "  rec a = 0 -> pre b\n"
       "  and b = 1 -> pre a + pre b\n",
       "u"},
      {"running_max",
       "let node main (x) = m where rec m = x -> max (x, pre m)\n",
       "f"},
      {"rising_edge",
       "let node main (b) = b && not (false -> pre b)\n",
       "b"},
      {"running_mean",
       "let node main (x) = s /. n where\n"
       "  rec n = 1. -> pre n +. 1.\n"
       "  and s = x -> pre s +. x\n",
       "f"},
      {"two_instances",
       "let node integr (xo, x') = x where rec x = xo -> (pre x +. x' *. 0.5)\n"
       "let node main (x) = (integr (0., x), integr (1., x *. 2.))\n",
       "f"},
      {"reset_counter",
       "let node cpt () = o where rec o = 0 -> pre o + 1\n"
       "let node main (r) = reset cpt () every r\n",
       "b"},
      {"tuple_equation",
       "let node main (x) = (a, b) where\n"
       "  rec (a, b) = (x, 0. -> pre a)\n",
       "f"},
      {"last_cycle",
       "let node main (x) = y where\n"
       "  rec init z = 0.\n"
       "  and y = last z +. x\n"
       "  and z = y *. 0.5\n",
       "f"},
      {"nested_present",
       "let node cpt () = o where rec o = 0 -> pre o + 1\n"
       "let node main (a, b) =\n"
       "  present a -> (present b -> cpt () else 100) else reset cpt () every b\n",
       "bb"},
  };
  return programs;
}

// Random input of the given shape.
inline Value random_input(const std::string& shape, Rng& rng) {
  auto leaf = [&](char c) {
    switch (c) {
      case 'f': return Value::real(std::floor(rng.uniform() * 2000.0 - 1000.0) / 100.0);
      case 'b': return Value::boolean(rng.uniform() < 0.5);
      case 'i': return Value::integer(static_cast<std::int64_t>(rng.uniform() * 20.0) - 10);
      default: return Value::unit();
    }
  };
  if (shape.size() == 1) return leaf(shape[0]);
  Tuple items;
  for (char c : shape) items.push_back(leaf(c));
  return Value::tuple(std::move(items));
}

inline std::vector<Value> random_inputs(const std::string& shape, std::size_t n, std::uint64_t key) {
  Rng rng(key);
  std::vector<Value> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_input(shape, rng));
  return out;
}

}  // namespace rpz::testing
