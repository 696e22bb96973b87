#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

namespace tc {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;
using HighReal = boost::multiprecision::cpp_bin_float_50;

// Which constrained composition (and which approximating chain) is meant.
enum class Model { Cca, Carlitz };

inline constexpr std::array<Model, 2> kAllModels{Model::Cca, Model::Carlitz};

std::string_view to_string(Model model);

// Accepts "cca" and "carlitz" (case-insensitive); throws DomainError otherwise.
Model parse_model(std::string_view name);

// Multiplicity of the adjacent pair (j, k): the number of ways two columns of
// heights j and k can share at least one edge (CCA), or the Carlitz
// adjacent-distinct indicator.
constexpr std::int64_t transfer_weight(Model model, std::int64_t j, std::int64_t k) {
  if (model == Model::Cca) return j + k - 1;
  return j != k ? 1 : 0;
}

// Caps that protect against combinatorial explosion. Every cap can be lifted
// by setting `unsafe`.
struct Guards {
  int enumerate_max_nu = 20;
  int exact_max_nu = 300;
  std::uint64_t step_cap = 1'000'000'000ULL;
  bool unsafe = false;
};

}  // namespace tc
