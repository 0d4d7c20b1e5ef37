/*******************************************************************************
 * Cost bounds for subgraph inference versus full-graph inference.
 *
 * With n nodes, feature width d, clusters of sizes nᵢ and at most φ appended
 * nodes per subgraph, per-subgraph inference costs Σ[(nᵢ+φ)²d + (nᵢ+φ)d²]
 * against n²d + nd² for the whole graph. It is never worse when
 *
 *   r ≤ (d−2)/(d+φ)   and   φ ≤ (n² − Σnᵢ²)/(nd).
 *
 * @file:   feasibility.hpp
 ******************************************************************************/
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace coarsegnn {

/// (d−2−r·d)/r: the largest φ admitted by the ratio condition. Negative
/// values mean no φ works. Throws std::invalid_argument for r ∉ (0,1] or
/// d < 1.
[[nodiscard]] double phi_max_bound(double d, double r);

/// (d−2)/(d+φ). Throws for d < 1 or φ < 0.
[[nodiscard]] double ratio_bound(double d, double phi_max);

/// (n² − Σnᵢ²)/(nd). Throws unless Σnᵢ = n.
[[nodiscard]] double phi_second_bound(std::size_t n, double d,
                                      std::span<const std::size_t> cluster_sizes);

struct CostComparison {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  bool conditions_met = false; ///< both sufficient conditions satisfied
};

/// Evaluates both sides with r = k/n. Throws std::logic_error if the
/// conditions are met but lhs > rhs.
[[nodiscard]] CostComparison compare_costs(std::size_t n, double d,
                                        std::span<const std::size_t> cluster_sizes,
                                        double phi_max);

/// n²d + nd² − [(n/α+φ)²d + (n/α+φ)d²].
[[nodiscard]] double time_diff_T(double n, double d, double alpha, double phi_max);

/// k = round(n·r) sizes differing by at most one.
[[nodiscard]] std::vector<std::size_t> balanced_sizes(std::size_t n, double r);

struct FeasibilityPoint {
  std::size_t n = 0;
  double r = 0.0;
  bool feasible = false;
};

/// For every (n, r): balanced clusters with φ appended nodes each, feasible
/// when the subgraph cost does not exceed the full cost.
[[nodiscard]] std::vector<FeasibilityPoint> feasibility_region(std::span<const std::size_t> ns,
                                                               std::span<const double> rs,
                                                               double d, double phi_max);
/// Columns n, r, feasible.
[[nodiscard]] std::string feasibility_csv(std::span<const FeasibilityPoint> points);

} // namespace coarsegnn
