#pragma once

#include <cctype>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>

#include "pwstpc/error.hpp"

namespace pwstpc {

// Tiny real-valued expression language in one variable:
//   expr  := term (('+' | '-') term)*
//   term  := unary (('*' | '/') unary)*
//   unary := ('-' | '+') unary | atom
//   atom  := number | 'x' | 'pi' | ('sin' | 'cos' | 'exp') '(' expr ')' | '(' expr ')'

using RealFn = std::function<double(double)>;

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(std::string src) : s_(std::move(src)) {}

  RealFn parse() {
    RealFn f = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return f;
  }

 private:
  RealFn expr() {
    RealFn lhs = term();
    for (;;) {
      if (eat('+')) {
        RealFn rhs = term();
        lhs = [lhs, rhs](double x) { return lhs(x) + rhs(x); };
      } else if (eat('-')) {
        RealFn rhs = term();
        lhs = [lhs, rhs](double x) { return lhs(x) - rhs(x); };
      } else {
        return lhs;
      }
    }
  }

  RealFn term() {
    RealFn lhs = unary();
    for (;;) {
      if (eat('*')) {
        RealFn rhs = unary();
        lhs = [lhs, rhs](double x) { return lhs(x) * rhs(x); };
      } else if (eat('/')) {
        RealFn rhs = unary();
        lhs = [lhs, rhs](double x) { return lhs(x) / rhs(x); };
      } else {
        return lhs;
      }
    }
  }

  RealFn unary() {
    if (eat('-')) {
      RealFn f = unary();
      return [f](double x) { return -f(x); };
    }
    if (eat('+')) return unary();
    return atom();
  }

  RealFn atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    if (eat('(')) {
      RealFn f = expr();
      if (!eat(')')) fail("missing ')'");
      return f;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("bad number");
      }
      pos_ += used;
      return [v](double) { return v; };
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t end = pos_;
      while (end < s_.size() && std::isalpha(static_cast<unsigned char>(s_[end]))) ++end;
      const std::string name = s_.substr(pos_, end - pos_);
      pos_ = end;
      if (name == "x") return [](double x) { return x; };
      if (name == "pi") return [](double) { return std::numbers::pi; };
      double (*fn)(double) = nullptr;
      if (name == "sin") fn = [](double v) { return std::sin(v); };
      if (name == "cos") fn = [](double v) { return std::cos(v); };
      if (name == "exp") fn = [](double v) { return std::exp(v); };
      if (!fn) fail("unknown name '" + name + "'");
      if (!eat('(')) fail("expected '(' after " + name);
      RealFn arg = expr();
      if (!eat(')')) fail("missing ')'");
      return [fn, arg](double x) { return fn(arg(x)); };
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& why) {
    throw InvalidArgument("expression '" + s_ + "' at offset " + std::to_string(pos_) + ": " + why);
  }

  std::string s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline RealFn parse_expression(const std::string& src) { return detail::ExprParser(src).parse(); }

}  // namespace pwstpc
