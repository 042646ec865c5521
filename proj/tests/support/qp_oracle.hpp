#pragma once

#include "mlsvm/matrix.hpp"

#include <span>
#include <vector>

namespace mlsvm::testing {

struct QpSolution {
    std::vector<double> alpha;
    double objective = 0.0;  // sum(alpha) - 1/2 alpha^T Q alpha
    std::size_t iterations = 0;
};

inline constexpr std::size_t kQpOracleMaxPoints = 50;

/// Dense solver for max sum(a) - 1/2 a^T Q a subject to y^T a = 0 and
/// 0 <= a_i <= bounds[i], Q_ij = y_i y_j exp(-gamma |x_i - x_j|^2).
/// Accelerated projected gradient with adaptive restart; the projection onto
/// the feasible set is found by bisection on the equality multiplier.
/// Throws mlsvm::InvalidArgument for more than kQpOracleMaxPoints points.
[[nodiscard]] QpSolution qp_oracle(const Matrix& points, std::span<const int> labels, std::span<const double> bounds,
                                   double gamma);

/// Euclidean projection of v onto {a : y^T a = 0, 0 <= a <= bounds}.
[[nodiscard]] std::vector<double> project_feasible(std::span<const double> v, std::span<const int> labels,
                                                   std::span<const double> bounds);

}  // namespace mlsvm::testing
