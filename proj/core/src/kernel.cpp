#include "mlsvm/kernel.hpp"

#include "mlsvm/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mlsvm {

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
    if (x.size() != y.size()) {
        throw InvalidArgument("kernel arguments differ in dimension");
    }
    if (!(gamma > 0.0)) {
        throw InvalidArgument("RBF gamma must be positive");
    }
    return std::exp(-gamma * squared_distance(x, y));
}

namespace {
constexpr std::size_t kNoSlot = std::numeric_limits<std::size_t>::max();
}

KernelCache::KernelCache(const Matrix& points, double gamma, std::size_t budget_bytes)
    : points_(points), gamma_(gamma), slot_of_(points.rows(), kNoSlot) {
    const std::size_t n = std::max<std::size_t>(1, points.rows());
    capacity_ = std::clamp<std::size_t>(budget_bytes / (n * sizeof(double)), 2, n);
}

std::span<const double> KernelCache::row(std::size_t i) {
    const std::size_t n = points_.rows();
    std::size_t slot = slot_of_[i];
    if (slot != kNoSlot) {
        lru_.splice(lru_.begin(), lru_, position_[slot]);
        return slots_[slot];
    }
    ++misses_;
    if (slots_.size() < capacity_) {
        slot = slots_.size();
        slots_.emplace_back(n);
        owner_.push_back(i);
        lru_.push_front(slot);
        position_.push_back(lru_.begin());
    } else {
        slot = lru_.back();
        slot_of_[owner_[slot]] = kNoSlot;
        owner_[slot] = i;
        lru_.splice(lru_.begin(), lru_, position_[slot]);
    }
    slot_of_[i] = slot;
    auto& values = slots_[slot];
    const auto xi = points_.row(i);
    for (std::size_t j = 0; j < n; ++j) {
        values[j] = std::exp(-gamma_ * squared_distance(xi, points_.row(j)));
    }
    return values;
}

}  // namespace mlsvm
