#pragma once

// Shared helpers for the test suites: finite differences, relative error,
// random instances, and scratch directories.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "f2ocl/rng.hpp"

namespace testutil {

// Central difference d f / d x through a mutable reference; restores x.
template <typename F>
double central_diff(F&& f, double& x, double h = 1e-5) {
  const double x0 = x;
  x = x0 + h;
  const double fp = f();
  x = x0 - h;
  const double fm = f();
  x = x0;
  return (fp - fm) / (2.0 * h);
}

// Relative error with an absolute floor so near-zero pairs don't blow up.
inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({floor, std::abs(a), std::abs(b)});
}

inline std::vector<double> random_vector(f2ocl::CounterRng& rng, std::size_t n,
                                         double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.next_gaussian(scale);
  return v;
}

// Fresh scratch directory under the current working directory; wiped on
// construction and destruction so reruns start clean.
class ScratchDir {
public:
  explicit ScratchDir(const std::string& name) : path_("scratch_" + name) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() { std::filesystem::remove_all(path_); }

  const std::string& path() const { return path_; }
  std::string file(const std::string& name) const { return path_ + "/" + name; }

private:
  std::string path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace testutil
