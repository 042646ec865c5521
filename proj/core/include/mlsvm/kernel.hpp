#pragma once

#include "mlsvm/matrix.hpp"

#include <cstddef>
#include <list>
#include <span>
#include <vector>

namespace mlsvm {

/// exp(-gamma * ||x - y||^2). Throws InvalidArgument on a dimension mismatch
/// or non-positive gamma.
[[nodiscard]] double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

/// LRU cache of RBF kernel rows over a fixed point set.
class KernelCache {
public:
    KernelCache(const Matrix& points, double gamma, std::size_t budget_bytes);

    /// Row i of the kernel matrix. Valid until two further distinct rows are requested.
    [[nodiscard]] std::span<const double> row(std::size_t i);

    [[nodiscard]] std::size_t capacity_rows() const noexcept { return capacity_; }
    [[nodiscard]] std::size_t misses() const noexcept { return misses_; }

private:
    const Matrix& points_;
    double gamma_;
    std::size_t capacity_;
    std::size_t misses_ = 0;
    std::vector<std::vector<double>> slots_;
    std::vector<std::size_t> slot_of_;
    std::vector<std::size_t> owner_;
    std::list<std::size_t> lru_;  // slot ids, most recent at the front
    std::vector<std::list<std::size_t>::iterator> position_;
};

}  // namespace mlsvm
