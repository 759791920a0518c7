// verify.hpp
//
// Property suites over the estimators, query policies and learners. Each
// suite reports rows of (check, measured value, bound, pass).
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cfal {

struct VerifyRow {
  std::string suite;
  std::string check;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
};

/// Suite names in the order `all` runs them.
const std::vector<std::string>& verify_suites();

/// Runs one suite, or every suite for "all". Unknown names throw
/// std::invalid_argument.
std::vector<VerifyRow> verify(const std::string& suite, std::uint64_t seed = 1);

/// `suite,check,value,bound,status` table.
std::string verify_table(const std::vector<VerifyRow>& rows);

bool all_pass(const std::vector<VerifyRow>& rows);

/// Exact Pr(B < n t) for B ~ Bin(n, p).
double binomial_lower_tail(long n, double p, double t);
/// (1/sqrt(2 pi)) d/(d^2+1) exp(-d^2/2) with d = sqrt(4 n (t-p)^2 / p).
double binomial_tail_lower_bound(long n, double p, double t);

}  // namespace cfal
