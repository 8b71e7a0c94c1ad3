#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "uavrf/uavrf.hpp"

namespace uavrf::test {

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("uavrf_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline GeneratorConfig small_generator(int n_classes = 4, std::size_t frame_len = std::size_t{1} << 15) {
  GeneratorConfig g;
  g.n_classes = n_classes;
  g.frame_len = frame_len;
  return g;
}

inline std::vector<double> gaussian(std::size_t n, std::mt19937_64& rng, double sigma = 1.0) {
  std::normal_distribution<double> d(0.0, sigma);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace uavrf::test
