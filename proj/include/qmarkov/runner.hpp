#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qmarkov/config.hpp"

namespace qmarkov {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Wilson score interval for `successes` out of `n` at normal quantile z.
Interval wilson_interval(long successes, long n, double z);

struct RunOptions {
  std::string out_dir = "out";
  unsigned jobs = 1;
};

/// Executes the experiment, writes artifacts under out_dir and the summary to
/// `summary`. Returns 0 on success, 1 when any trajectory or check failed.
int run(const ExperimentConfig& cfg, const RunOptions& options, std::ostream& summary);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Quick invariant checks over every module (seeded, a few seconds).
std::vector<CheckResult> run_verify_suite(std::uint64_t seed);

}  // namespace qmarkov
