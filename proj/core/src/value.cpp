// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "decov/value.hpp"

#include <charconv>
#include <cmath>

namespace decov {

bool value_truthy(const Value& a) {
  struct V {
    bool operator()(std::monostate) const { return false; }
    bool operator()(bool b) const { return b; }
    bool operator()(int64_t i) const { return i != 0; }
    bool operator()(double d) const { return d != 0.0; }
    bool operator()(const std::string& s) const { return !s.empty(); }
    bool operator()(const Value::Tuple& t) const { return t && !t->empty(); }
    bool operator()(FuncRef) const { return true; }
    bool operator()(RangeIter) const { return true; }
  };
  return std::visit(V{}, a.v);
}

bool value_equal(const Value& a, const Value& b) {
  // numeric cross-type comparison; bools compare as themselves, not as ints
  auto num = [](const Value& x, double& out) {
    if (auto* i = std::get_if<int64_t>(&x.v)) { out = (double)*i; return true; }
    if (auto* d = std::get_if<double>(&x.v)) { out = *d; return true; }
    return false;
  };
  if (a.v.index() != b.v.index()) {
    double x, y;
    if (num(a, x) && num(b, y)) return x == y;
    return false;
  }
  if (auto* t = std::get_if<Value::Tuple>(&a.v)) {
    auto& u = std::get<Value::Tuple>(b.v);
    if ((*t)->size() != u->size()) return false;
    for (size_t i = 0; i < (*t)->size(); ++i)
      if (!value_equal((**t)[i], (*u)[i])) return false;
    return true;
  }
  if (auto* f = std::get_if<FuncRef>(&a.v))
    return f->registry_id == std::get<FuncRef>(b.v).registry_id;
  if (std::holds_alternative<RangeIter>(a.v)) return false;
  return a.v == b.v;
}

std::string format_double(double d) {
  if (std::isnan(d)) return "nan";
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), d);
  std::string s(buf, p);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

std::string format_value(const Value& a) {
  struct V {
    std::string operator()(std::monostate) const { return "None"; }
    std::string operator()(bool b) const { return b ? "True" : "False"; }
    std::string operator()(int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const { return format_double(d); }
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(const Value::Tuple& t) const {
      std::string out = "(";
      for (size_t i = 0; i < t->size(); ++i) {
        if (i) out += ", ";
        out += format_value((*t)[i]);
      }
      if (t->size() == 1) out += ",";
      out += ")";
      return out;
    }
    std::string operator()(FuncRef f) const {
      return "<function #" + std::to_string(f.registry_id) + ">";
    }
    std::string operator()(RangeIter) const { return "<range_iterator>"; }
  };
  return std::visit(V{}, a.v);
}

Value constant_to_value(const Constant& c) {
  struct V {
    Value operator()(std::monostate) const { return Value{}; }
    Value operator()(bool b) const { return Value{b}; }
    Value operator()(int64_t i) const { return Value{i}; }
    Value operator()(double d) const { return Value{d}; }
    Value operator()(const std::string& s) const { return Value{s}; }
    Value operator()(const Constant::Tuple& t) const {
      auto vec = std::make_shared<std::vector<Value>>();
      vec->reserve(t.size());
      for (auto& e : t) vec->push_back(constant_to_value(e));
      return Value{vec};
    }
    Value operator()(const CodePtr&) const { return Value{}; }
    Value operator()(const ProbeHandle&) const { return Value{}; }
  };
  return std::visit(V{}, c.v);
}

}  // namespace decov
