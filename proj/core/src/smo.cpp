#include "mlsvm/svm.hpp"

#include "mlsvm/error.hpp"
#include "mlsvm/kernel.hpp"
#include "mlsvm/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mlsvm {

double SvmModel::decision(std::span<const double> x) const {
    if ((!coefficients.empty() || support_vectors.cols() > 0) && x.size() != support_vectors.cols()) {
        throw InvalidArgument(fmt::format("model expects {} features, got {}", support_vectors.cols(), x.size()));
    }
    double sum = bias;
    for (std::size_t i = 0; i < coefficients.size(); ++i) {
        sum += coefficients[i] * std::exp(-gamma * squared_distance(support_vectors.row(i), x));
    }
    return sum;
}

std::vector<double> decision_values(const SvmModel& model, const Matrix& points, unsigned threads) {
    std::vector<double> out(points.rows());
    constexpr std::size_t block = 128;
    const std::size_t blocks = (points.rows() + block - 1) / block;
    parallel_for(blocks, threads, [&](std::size_t b) {
        for (std::size_t i = b * block; i < std::min(points.rows(), (b + 1) * block); ++i) {
            out[i] = model.decision(points.row(i));
        }
    });
    return out;
}

namespace {

constexpr double kTau = 1e-12;

class SmoSolver {
public:
    SmoSolver(const Matrix& points, std::span<const int> labels, std::vector<double> bounds, double gamma,
              const SmoOptions& options)
        : n_(points.rows()),
          y_(labels),
          bound_(std::move(bounds)),
          cache_(points, gamma, options.cache_bytes),
          options_(options),
          alpha_(n_, 0.0),
          gradient_(n_, -1.0) {}

    std::size_t run() {
        std::size_t iter = 0;
        while (iter < options_.max_iterations) {
            std::size_t i = 0;
            std::size_t j = 0;
            if (!select_working_set(i, j)) {
                converged_ = true;
                return iter;
            }
            ++iter;
            update(i, j);
        }
        std::size_t i = 0;
        std::size_t j = 0;
        converged_ = !select_working_set(i, j);
        return iter;
    }

    [[nodiscard]] bool converged() const noexcept { return converged_; }
    [[nodiscard]] double violation() const noexcept { return violation_; }
    [[nodiscard]] const std::vector<double>& alpha() const noexcept { return alpha_; }

    [[nodiscard]] double objective() const {
        // with G = Q alpha - e: 1/2 a^T Q a - e^T a = sum a_i (G_i - 1) / 2
        double value = 0.0;
        for (std::size_t t = 0; t < n_; ++t) {
            value += alpha_[t] * (gradient_[t] - 1.0);
        }
        return -0.5 * value;
    }

    [[nodiscard]] double bias() const {
        double upper = std::numeric_limits<double>::infinity();
        double lower = -std::numeric_limits<double>::infinity();
        double free_sum = 0.0;
        std::size_t free_count = 0;
        for (std::size_t t = 0; t < n_; ++t) {
            const double yg = y_[t] * gradient_[t];
            if (at_upper(t)) {
                if (y_[t] == -1) {
                    upper = std::min(upper, yg);
                } else {
                    lower = std::max(lower, yg);
                }
            } else if (at_lower(t)) {
                if (y_[t] == 1) {
                    upper = std::min(upper, yg);
                } else {
                    lower = std::max(lower, yg);
                }
            } else {
                ++free_count;
                free_sum += yg;
            }
        }
        const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (upper + lower) / 2.0;
        return -rho;
    }

private:
    [[nodiscard]] bool at_upper(std::size_t t) const noexcept { return alpha_[t] >= bound_[t]; }
    [[nodiscard]] bool at_lower(std::size_t t) const noexcept { return alpha_[t] <= 0.0; }

    bool select_working_set(std::size_t& out_i, std::size_t& out_j) {
        double gmax = -std::numeric_limits<double>::infinity();
        std::size_t i = n_;
        for (std::size_t t = 0; t < n_; ++t) {
            if (y_[t] == 1) {
                if (!at_upper(t) && -gradient_[t] >= gmax) {
                    gmax = -gradient_[t];
                    i = t;
                }
            } else if (!at_lower(t) && gradient_[t] >= gmax) {
                gmax = gradient_[t];
                i = t;
            }
        }

        double gmax2 = -std::numeric_limits<double>::infinity();
        double best_gain = std::numeric_limits<double>::infinity();
        std::size_t j = n_;
        std::span<const double> ki;
        if (i != n_) {
            ki = cache_.row(i);
        }
        for (std::size_t t = 0; t < n_; ++t) {
            double grad_diff = 0.0;
            if (y_[t] == 1) {
                if (at_lower(t)) {
                    continue;
                }
                gmax2 = std::max(gmax2, gradient_[t]);
                grad_diff = gmax + gradient_[t];
            } else {
                if (at_upper(t)) {
                    continue;
                }
                gmax2 = std::max(gmax2, -gradient_[t]);
                grad_diff = gmax - gradient_[t];
            }
            if (i != n_ && grad_diff > 0.0) {
                double quad = 2.0 - 2.0 * ki[t];
                if (quad <= 0.0) {
                    quad = kTau;
                }
                const double gain = -(grad_diff * grad_diff) / quad;
                if (gain <= best_gain) {
                    best_gain = gain;
                    j = t;
                }
            }
        }
        violation_ = gmax + gmax2;
        if (violation_ < options_.tolerance || j == n_) {
            return false;
        }
        out_i = i;
        out_j = j;
        return true;
    }

    void update(std::size_t i, std::size_t j) {
        const auto ki = cache_.row(i);
        const auto kj = cache_.row(j);
        const double ci = bound_[i];
        const double cj = bound_[j];
        const double old_i = alpha_[i];
        const double old_j = alpha_[j];
        double& ai = alpha_[i];
        double& aj = alpha_[j];
        // Q_ij = y_i y_j K_ij, Q_ii = Q_jj = 1 for the RBF kernel
        const double qij = y_[i] * y_[j] * ki[j];

        if (y_[i] != y_[j]) {
            double quad = 2.0 + 2.0 * qij;
            if (quad <= 0.0) {
                quad = kTau;
            }
            const double delta = (-gradient_[i] - gradient_[j]) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0.0) {
                if (aj < 0.0) {
                    aj = 0.0;
                    ai = diff;
                }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = -diff;
            }
            if (diff > ci - cj) {
                if (ai > ci) {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if (aj > cj) {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            double quad = 2.0 - 2.0 * qij;
            if (quad <= 0.0) {
                quad = kTau;
            }
            const double delta = (gradient_[i] - gradient_[j]) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > ci) {
                if (ai > ci) {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if (aj < 0.0) {
                aj = 0.0;
                ai = sum;
            }
            if (sum > cj) {
                if (aj > cj) {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = sum;
            }
        }

        const double di = ai - old_i;
        const double dj = aj - old_j;
        const double si = y_[i] * di;
        const double sj = y_[j] * dj;
        for (std::size_t t = 0; t < n_; ++t) {
            gradient_[t] += y_[t] * (ki[t] * si + kj[t] * sj);
        }
    }

    std::size_t n_;
    std::span<const int> y_;
    std::vector<double> bound_;
    KernelCache cache_;
    SmoOptions options_;
    std::vector<double> alpha_;
    std::vector<double> gradient_;
    double violation_ = 0.0;
    bool converged_ = false;
};

}  // namespace

SmoResult smo_train(const Matrix& points, std::span<const int> labels, double C, std::span<const double> weights,
                    double gamma, const SmoOptions& options) {
    const std::size_t n = points.rows();
    if (labels.size() != n || weights.size() != n) {
        throw InvalidArgument("labels and weights must match the number of points");
    }
    if (!(gamma > 0.0)) {
        throw InvalidArgument("RBF gamma must be positive");
    }
    const bool has_positive = std::find(labels.begin(), labels.end(), 1) != labels.end();
    const bool has_negative = std::find(labels.begin(), labels.end(), -1) != labels.end();
    if (!has_positive || !has_negative) {
        throw InvalidArgument("SVM training needs both classes");
    }
    std::vector<double> bounds(n);
    for (std::size_t t = 0; t < n; ++t) {
        if (labels[t] != 1 && labels[t] != -1) {
            throw InvalidArgument("labels must be +1 or -1");
        }
        bounds[t] = C * weights[t];
        if (!(bounds[t] > 0.0)) {
            throw InvalidArgument("effective penalty bounds must be positive");
        }
    }

    SmoSolver solver(points, labels, std::move(bounds), gamma, options);
    const std::size_t iterations = solver.run();

    SmoResult result;
    result.alpha = solver.alpha();
    result.dual_objective = -solver.objective();
    result.kkt_violation = solver.violation();
    for (std::size_t t = 0; t < n; ++t) {
        if (result.alpha[t] > 0.0) {
            result.support_indices.push_back(t);
        }
    }
    SvmModel& m = result.model;
    m.support_vectors = points.select_rows(result.support_indices);
    m.coefficients.reserve(result.support_indices.size());
    for (const auto t : result.support_indices) {
        m.coefficients.push_back(result.alpha[t] * labels[t]);
    }
    m.bias = solver.bias();
    m.gamma = gamma;
    m.C = C;
    m.iterations = iterations;
    m.converged = solver.converged();
    return result;
}

double dual_objective(const Matrix& points, std::span<const int> labels, std::span<const double> alpha,
                      double gamma) {
    const std::size_t n = points.rows();
    double linear = 0.0;
    double quadratic = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        linear += alpha[i];
        if (alpha[i] == 0.0) {
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (alpha[j] != 0.0) {
                quadratic += alpha[i] * alpha[j] * labels[i] * labels[j] *
                             std::exp(-gamma * squared_distance(points.row(i), points.row(j)));
            }
        }
    }
    return linear - 0.5 * quadratic;
}

}  // namespace mlsvm
