#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "levykm/expr.hpp"

namespace levykm {

// Candidate-function dictionary: either all monomials of total degree <= d in
// graded-lexicographic order, or an explicit list of expressions.
class Dictionary {
 public:
  Dictionary() = default;

  static Dictionary monomials(int n, int degree) {
    if (n < 1 || degree < 0) throw std::invalid_argument("dictionary: need n >= 1, degree >= 0");
    Dictionary d;
    d.n_ = n;
    d.monomial_ = true;
    std::vector<int> expo(n, 0);
    for (int total = 0; total <= degree; ++total) d.enumerate(expo, 0, total);
    return d;
  }

  static Dictionary from_expressions(int n, std::vector<Expr> basis) {
    Dictionary d;
    d.n_ = n;
    d.monomial_ = false;
    d.exprs_ = std::move(basis);
    for (const Expr& e : d.exprs_)
      if (e.max_variable() > n)
        throw std::invalid_argument("dictionary: basis function references variable beyond n");
    return d;
  }

  int input_dim() const { return n_; }
  std::size_t size() const { return monomial_ ? terms_.size() : exprs_.size(); }

  double eval_one(std::size_t k, std::span<const double> point) const {
    if (!monomial_) return exprs_[k].evaluate(point);
    double v = 1.0;
    for (const auto& [dim, exp] : terms_[k]) {
      double p = point[dim];
      for (int e = 1; e < exp; ++e) p *= point[dim];
      v *= p;
    }
    return v;
  }

  void eval_row(std::span<const double> point, std::span<double> row) const {
    for (std::size_t k = 0; k < size(); ++k) row[k] = eval_one(k, point);
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(size());
    if (!monomial_) {
      for (const Expr& e : exprs_) out.push_back(e.str());
      return out;
    }
    for (const auto& term : terms_) {
      if (term.empty()) {
        out.push_back("1");
        continue;
      }
      std::string s;
      for (const auto& [dim, exp] : term) {
        if (!s.empty()) s += "*";
        s += "x" + std::to_string(dim + 1);
        if (exp > 1) s += "^" + std::to_string(exp);
      }
      out.push_back(s);
    }
    return out;
  }

 private:
  // Exponent vectors of one total degree, lexicographically descending in the
  // leading variable; sparse (dim, exponent) pairs per basis function.
  void enumerate(std::vector<int>& expo, int dim, int remaining) {
    if (dim == n_ - 1) {
      expo[dim] = remaining;
      std::vector<std::pair<int, int>> term;
      for (int i = 0; i < n_; ++i)
        if (expo[i] > 0) term.emplace_back(i, expo[i]);
      terms_.push_back(std::move(term));
      expo[dim] = 0;
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      expo[dim] = e;
      enumerate(expo, dim + 1, remaining - e);
    }
    expo[dim] = 0;
  }

  int n_ = 0;
  bool monomial_ = true;
  std::vector<std::vector<std::pair<int, int>>> terms_;
  std::vector<Expr> exprs_;
};

}  // namespace levykm
