#pragma once

#include "mlsvm/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mlsvm {

/// Kernel expansion sum_i coef_i K(sv_i, x) + bias with an RBF kernel.
struct SvmModel {
    Matrix support_vectors;
    std::vector<double> coefficients;  // alpha_i * y_i
    double bias = 0.0;
    double gamma = 1.0;
    double C = 1.0;
    double weight_positive = 1.0;  // W+
    double weight_negative = 1.0;  // W-
    std::size_t level = 0;
    std::size_t iterations = 0;
    bool converged = true;

    [[nodiscard]] std::size_t support_vector_count() const noexcept { return coefficients.size(); }
    [[nodiscard]] std::size_t dims() const noexcept { return support_vectors.cols(); }

    /// Throws InvalidArgument on a dimension mismatch.
    [[nodiscard]] double decision(std::span<const double> x) const;
    /// sign of decision with sign(0) = +1.
    [[nodiscard]] int predict(std::span<const double> x) const { return decision(x) >= 0.0 ? 1 : -1; }

    friend bool operator==(const SvmModel&, const SvmModel&) = default;
};

/// Decision values for every row of `points`.
[[nodiscard]] std::vector<double> decision_values(const SvmModel& model, const Matrix& points, unsigned threads = 1);

struct SmoOptions {
    double tolerance = 1e-3;
    std::size_t max_iterations = 10'000'000;
    std::size_t cache_bytes = std::size_t{512} << 20;
};

struct SmoResult {
    SvmModel model;
    std::vector<double> alpha;  // one per training point
    double dual_objective = 0.0;  // sum(alpha) - 1/2 alpha^T Q alpha
    double kkt_violation = 0.0;
    std::vector<std::size_t> support_indices;  // training rows with alpha > 0
};

/// Dual SMO for the soft-margin SVM with per-point box bounds
/// 0 <= alpha_i <= C * weights[i]. Maximal-violating-pair selection with
/// second-order choice of the partner, no shrinking. On hitting
/// max_iterations the current iterate is returned with converged = false.
[[nodiscard]] SmoResult smo_train(const Matrix& points, std::span<const int> labels, double C,
                                  std::span<const double> weights, double gamma, const SmoOptions& options = {});

/// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
[[nodiscard]] double dual_objective(const Matrix& points, std::span<const int> labels, std::span<const double> alpha,
                                    double gamma);

enum class WeightScheme { uniform, per_class, per_point };

/// uniform: W_i = 1.
/// per_class: W_i = 1 / (volume of i's class).
/// per_point: W_i = W^class * v_i / (volume of i's class), so each class sums to W^class.
[[nodiscard]] std::vector<double> class_weights(std::span<const int> labels, std::span<const double> volumes,
                                                WeightScheme scheme);

/// Rescales weights to mean 1, so C keeps its usual meaning as the average
/// per-point penalty.
[[nodiscard]] std::vector<double> penalty_scale(std::span<const double> weights);

}  // namespace mlsvm
