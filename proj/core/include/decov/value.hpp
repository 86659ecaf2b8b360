// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <type_traits>
#include <string>
#include <variant>
#include <vector>

#include "decov/bytecode.hpp"

namespace decov {

struct Value;

struct FuncRef {
  uint32_t registry_id;
  bool operator==(const FuncRef&) const = default;
};

struct RangeIter {
  int64_t cur;
  int64_t stop;
  bool operator==(const RangeIter&) const = default;
};

struct Value {
  using Tuple = std::shared_ptr<std::vector<Value>>;
  std::variant<std::monostate, bool, int64_t, double, std::string, Tuple, FuncRef,
               RangeIter>
      v;

  Value() = default;
  template <typename T>
    requires(!std::is_same_v<std::decay_t<T>, Value>)
  Value(T&& x) : v(std::forward<T>(x)) {}
};

bool value_truthy(const Value& a);
bool value_equal(const Value& a, const Value& b);

/// Printed form: None, True/False, integers, shortest-round-trip floats
/// (always with a '.', 'e' or special token), raw strings, tuples.
std::string format_value(const Value& a);

Value constant_to_value(const Constant& c);

}  // namespace decov
