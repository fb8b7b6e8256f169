#pragma once

#include <cstdint>
#include <string>

#include "cobweb/types.hpp"

namespace cobweb {

// Which category-utility formula drives learning and basic-level selection:
// the entropy-based score or the squared-probability one.
enum class CuVariant : std::uint8_t { info, prob };

// Sign applied to collocation scores before the softmax that weights the
// prediction mixture. positive favors the best-matching concepts; negative
// inverts that preference.
enum class SoftmaxSign : std::uint8_t { positive, negative };

struct TreeConfig {
  int window = 10;
  int min_count = 3;
  CuVariant cu_variant = CuVariant::info;
  double alpha = 0.001;
  SoftmaxSign softmax_sign = SoftmaxSign::positive;
  std::uint64_t seed = 123;
};

inline const char* to_string(CuVariant v) {
  return v == CuVariant::info ? "info" : "prob";
}

inline const char* to_string(SoftmaxSign s) {
  return s == SoftmaxSign::positive ? "positive" : "negative";
}

inline CuVariant cu_variant_from_string(const std::string& s) {
  if (s == "info") return CuVariant::info;
  if (s == "prob") return CuVariant::prob;
  throw Error("unknown category-utility variant: " + s);
}

inline SoftmaxSign softmax_sign_from_string(const std::string& s) {
  if (s == "positive") return SoftmaxSign::positive;
  if (s == "negative") return SoftmaxSign::negative;
  throw Error("unknown softmax sign: " + s);
}

}  // namespace cobweb
