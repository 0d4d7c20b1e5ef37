/*******************************************************************************
 * @file:   feasibility.cpp
 ******************************************************************************/
#include "coarsegnn/feasibility.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "coarsegnn/coarsen.hpp"

namespace coarsegnn {

double phi_max_bound(const double d, const double r) {
  if (!(r > 0.0 && r <= 1.0)) {
    throw std::invalid_argument("ratio must lie in (0,1]");
  }
  if (!(d >= 1.0)) {
    throw std::invalid_argument("feature dimension must be at least 1");
  }
  return (d - 2.0 - r * d) / r;
}

double ratio_bound(const double d, const double phi_max) {
  if (!(d >= 1.0)) {
    throw std::invalid_argument("feature dimension must be at least 1");
  }
  if (!(phi_max >= 0.0)) {
    throw std::invalid_argument("phi_max must be non-negative");
  }
  return (d - 2.0) / (d + phi_max);
}

double phi_second_bound(const std::size_t n, const double d,
                        std::span<const std::size_t> cluster_sizes) {
  if (n == 0 || !(d >= 1.0)) {
    throw std::invalid_argument("n and d must be at least 1");
  }
  const std::size_t total = std::accumulate(cluster_sizes.begin(), cluster_sizes.end(), std::size_t{0});
  if (total != n) {
    throw std::invalid_argument("cluster sizes must sum to n");
  }
  double squares = 0.0;
  for (const std::size_t s : cluster_sizes) {
    squares += static_cast<double>(s) * static_cast<double>(s);
  }
  const auto nn = static_cast<double>(n);
  return (nn * nn - squares) / (nn * d);
}

CostComparison compare_costs(const std::size_t n, const double d,
                          std::span<const std::size_t> cluster_sizes, const double phi_max) {
  const double second = phi_second_bound(n, d, cluster_sizes);
  if (!(phi_max >= 0.0)) {
    throw std::invalid_argument("phi_max must be non-negative");
  }
  CostComparison out;
  for (const std::size_t s : cluster_sizes) {
    const double m = static_cast<double>(s) + phi_max;
    out.lhs += m * m * d + m * d * d;
  }
  const auto nn = static_cast<double>(n);
  out.rhs = nn * nn * d + nn * d * d;
  out.holds = out.lhs <= out.rhs;
  const double r = static_cast<double>(cluster_sizes.size()) / nn;
  out.conditions_met = r <= ratio_bound(d, phi_max) && phi_max <= second;
  if (out.conditions_met && !out.holds) {
    throw std::logic_error("bound violated although both conditions hold");
  }
  return out;
}

double time_diff_T(const double n, const double d, const double alpha, const double phi_max) {
  const double m = n / alpha + phi_max;
  return n * n * d + n * d * d - (m * m * d + m * d * d);
}

std::vector<std::size_t> balanced_sizes(const std::size_t n, const double r) {
  const std::size_t k = target_cluster_count(n, r);
  std::vector<std::size_t> sizes(k, n / k);
  for (std::size_t i = 0; i < n % k; ++i) {
    ++sizes[i];
  }
  return sizes;
}

std::vector<FeasibilityPoint> feasibility_region(std::span<const std::size_t> ns,
                                                 std::span<const double> rs, const double d,
                                                 const double phi_max) {
  std::vector<FeasibilityPoint> points;
  for (const std::size_t n : ns) {
    for (const double r : rs) {
      const auto sizes = balanced_sizes(n, r);
      double lhs = 0.0;
      for (const std::size_t s : sizes) {
        const double m = static_cast<double>(s) + phi_max;
        lhs += m * m * d + m * d * d;
      }
      const auto nn = static_cast<double>(n);
      points.push_back({n, r, lhs <= nn * nn * d + nn * d * d});
    }
  }
  return points;
}

std::string feasibility_csv(std::span<const FeasibilityPoint> points) {
  std::ostringstream out;
  out << "n,r,feasible\n";
  for (const FeasibilityPoint &p : points) {
    out << p.n << ',' << p.r << ',' << (p.feasible ? 1 : 0) << '\n';
  }
  return out.str();
}

} // namespace coarsegnn
