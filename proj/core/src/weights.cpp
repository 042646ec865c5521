#include "mlsvm/svm.hpp"

#include "mlsvm/error.hpp"

#include <numeric>

namespace mlsvm {

std::vector<double> class_weights(std::span<const int> labels, std::span<const double> volumes, WeightScheme scheme) {
    if (labels.size() != volumes.size()) {
        throw InvalidArgument("labels and volumes differ in length");
    }
    double positive_volume = 0.0;
    double negative_volume = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!(volumes[i] > 0.0)) {
            throw InvalidArgument("volumes must be positive");
        }
        (labels[i] > 0 ? positive_volume : negative_volume) += volumes[i];
    }
    std::vector<double> w(labels.size(), 1.0);
    if (scheme == WeightScheme::uniform) {
        return w;
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double class_volume = labels[i] > 0 ? positive_volume : negative_volume;
        const double class_weight = 1.0 / class_volume;
        w[i] = scheme == WeightScheme::per_class ? class_weight : class_weight * volumes[i] / class_volume;
    }
    return w;
}

std::vector<double> penalty_scale(std::span<const double> weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<double> out(weights.begin(), weights.end());
    if (total > 0.0) {
        const double factor = static_cast<double>(weights.size()) / total;
        for (auto& w : out) {
            w *= factor;
        }
    }
    return out;
}

}  // namespace mlsvm
