// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "fuzz.hpp"

#include <random>
#include <vector>

namespace decov::testing {
namespace {

struct Fuzz {
  std::mt19937 rng;
  std::string out;
  int indent = 0;
  std::vector<std::string> int_vars;
  std::vector<std::pair<std::string, int>> funcs;  // name, arity
  int misc_counter = 0;
  int stmt_budget = 60;

  explicit Fuzz(uint32_t seed) : rng(seed) {}

  int pick(int n) { return (int)(rng() % (uint32_t)n); }
  bool chance(int percent) { return pick(100) < percent; }

  void emit(const std::string& s) {
    out.append((size_t)indent * 2, ' ');
    out += s;
    out += "\n";
  }

  std::string int_atom(const std::vector<std::string>& vars) {
    if (!vars.empty() && chance(55)) return vars[pick((int)vars.size())];
    return std::to_string(pick(20) - 5);
  }

  std::string int_expr(const std::vector<std::string>& vars, int depth = 0) {
    if (depth >= 2 || chance(35)) return int_atom(vars);
    switch (pick(6)) {
      case 0: return int_expr(vars, depth + 1) + " + " + int_expr(vars, depth + 1);
      case 1: return int_expr(vars, depth + 1) + " - " + int_expr(vars, depth + 1);
      case 2: return int_expr(vars, depth + 1) + " * " + int_atom(vars);
      case 3:  // denominator can't be zero
        return int_expr(vars, depth + 1) + " / (" + int_atom(vars) + " * " +
               int_atom(vars) + " + 1)";
      case 4:
        return int_expr(vars, depth + 1) + " % (" + int_atom(vars) + " * " +
               int_atom(vars) + " + 3)";
      default: {
        if (!funcs.empty()) {
          auto& [name, arity] = funcs[pick((int)funcs.size())];
          std::string call = name + "(";
          for (int i = 0; i < arity; ++i) {
            if (i) call += ", ";
            call += int_expr(vars, depth + 1);
          }
          return call + ")";
        }
        return "-" + int_atom(vars);
      }
    }
  }

  std::string cond(const std::vector<std::string>& vars) {
    static const char* cmp[] = {"<", "<=", ">", ">=", "==", "!="};
    std::string c = int_expr(vars, 1) + " " + cmp[pick(6)] + " " + int_expr(vars, 1);
    if (chance(25)) {
      std::string c2 =
          int_expr(vars, 1) + " " + cmp[pick(6)] + " " + int_expr(vars, 1);
      c = c + (chance(50) ? " and " : " or ") + c2;
    }
    if (chance(10)) c = "not (" + c + ")";
    return c;
  }

  std::string misc_expr(const std::vector<std::string>& vars) {
    switch (pick(5)) {
      case 0: return "\"s" + std::to_string(pick(4)) + "\"";
      case 1: return std::to_string(pick(9)) + "." + std::to_string(pick(10));
      case 2: return chance(50) ? "True" : "False";
      case 3: return "None";
      default:
        return "(" + int_expr(vars, 1) + ", " + int_expr(vars, 1) + ")";
    }
  }

  std::string fresh_var(std::vector<std::string>& vars, const char* prefix) {
    std::string name = prefix + std::to_string(misc_counter++);
    vars.push_back(name);
    return name;
  }

  void gen_stmt(std::vector<std::string>& vars, int depth, bool in_func) {
    if (--stmt_budget < 0) return;
    int roll = pick(100);
    if (roll < 28 || depth >= 3) {
      if (chance(75) || vars.empty()) {
        std::string name =
            (!vars.empty() && chance(50)) ? vars[pick((int)vars.size())]
                                          : fresh_var(vars, "v");
        emit(name + " = " + int_expr(vars));
      } else {
        emit("print(" + (chance(70) ? int_expr(vars) : misc_expr(vars)) + ")");
      }
      return;
    }
    if (roll < 44) {  // if / elif / else
      std::string head = "if " + cond(vars);
      if (chance(20)) {  // single-line form
        emit(head + ": " + vars[pick((int)vars.size())] + " = " + int_expr(vars));
        return;
      }
      emit(head + " {");
      gen_block(vars, depth + 1, in_func, 1 + pick(3));
      if (chance(30)) {
        emit("} elif " + cond(vars) + " {");
        gen_block(vars, depth + 1, in_func, 1 + pick(2));
      }
      if (chance(55)) {
        emit("} else {");
        gen_block(vars, depth + 1, in_func, 1 + pick(3));
      }
      emit("}");
      return;
    }
    if (roll < 56) {  // bounded for
      std::string v = fresh_var(vars, "i");
      emit("for " + v + " in range(" + std::to_string(1 + pick(6)) + ") {");
      gen_block(vars, depth + 1, in_func, 1 + pick(3));
      if (chance(25)) {
        emit("} else {");
        gen_block(vars, depth + 1, in_func, 1);
      }
      emit("}");
      return;
    }
    if (roll < 66) {  // bounded while on a dedicated counter
      // the counter stays out of the variable pool so no nested statement
      // can reassign it and stall the loop
      std::string c = "w" + std::to_string(misc_counter++);
      emit(c + " = " + std::to_string(1 + pick(6)));
      emit("while " + c + " > 0 {");
      ++indent;
      emit(c + " = " + c + " - 1");
      --indent;
      gen_block(vars, depth + 1, in_func, pick(3));
      if (chance(25)) {
        emit("} else {");
        gen_block(vars, depth + 1, in_func, 1);
      }
      emit("}");
      return;
    }
    if (roll < 76) {  // match
      emit("match " + int_expr(vars) + " {");
      ++indent;
      int arms = 1 + pick(3);
      for (int i = 0; i < arms; ++i) {
        emit("case " + std::to_string(pick(6) - 1) + " {");
        gen_block(vars, depth + 1, in_func, 1 + pick(2));
        emit("}");
      }
      if (chance(55)) {
        emit("case _ {");
        gen_block(vars, depth + 1, in_func, 1);
        emit("}");
      }
      --indent;
      emit("}");
      return;
    }
    if (roll < 86) {  // try/except, sometimes actually raising
      emit("try {");
      ++indent;
      if (chance(40)) {
        if (chance(50))
          emit("if " + cond(vars) + ": raise");
        else
          emit(fresh_var(vars, "t") + " = " + int_atom(vars) + " / " +
               std::to_string(pick(3)));  // may divide by zero
      }
      --indent;
      gen_block(vars, depth + 1, in_func, 1 + pick(2));
      emit("} except {");
      gen_block(vars, depth + 1, in_func, 1 + pick(2));
      emit("}");
      return;
    }
    if (roll < 92) {
      emit("pass");
      return;
    }
    if (roll < 96 && in_func) {
      emit("if " + cond(vars) + ": return " + int_expr(vars));
      return;
    }
    // rare uncaught hazard, guarded so most programs still finish
    emit("if " + std::to_string(pick(30)) + " == 1 {");
    ++indent;
    emit("raise");
    --indent;
    emit("}");
  }

  void gen_block(std::vector<std::string>& vars, int depth, bool in_func, int n) {
    ++indent;
    size_t before = vars.size();
    size_t emitted = out.size();
    for (int i = 0; i < n; ++i) gen_stmt(vars, depth, in_func);
    if (out.size() == emitted) emit("pass");
    // names assigned on one arm may be unbound on another; forget them so
    // later statements never gamble on an undefined name
    vars.resize(before);
    --indent;
  }

  std::string generate() {
    int nfuncs = pick(3);
    for (int fi = 0; fi < nfuncs; ++fi) {
      int arity = 1 + pick(2);
      std::string name = "f" + std::to_string(fi);
      std::vector<std::string> params;
      std::string head = "def " + name + "(";
      for (int i = 0; i < arity; ++i) {
        if (i) head += ", ";
        params.push_back("p" + std::to_string(i));
        head += params.back();
      }
      emit(head + ") {");
      gen_block(params, 1, true, 2 + pick(4));
      ++indent;
      emit("return " + int_expr(params));
      --indent;
      emit("}");
      funcs.push_back({name, arity});
    }
    std::vector<std::string> vars;
    emit(fresh_var(vars, "v") + " = " + std::to_string(pick(10)));
    int n = 6 + pick(8);
    for (int i = 0; i < n; ++i) gen_stmt(vars, 0, false);
    if (!vars.empty()) emit("print(" + vars[pick((int)vars.size())] + ")");
    return out;
  }
};

}  // namespace

std::string generate_program(uint32_t seed) {
  Fuzz f(seed);
  return f.generate();
}

}  // namespace decov::testing
