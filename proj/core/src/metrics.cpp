#include "mlsvm/metrics.hpp"

#include "mlsvm/error.hpp"

#include <cmath>

namespace mlsvm {

PerformanceReport metrics_from_counts(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn) {
    PerformanceReport r;
    r.tp = tp;
    r.tn = tn;
    r.fp = fp;
    r.fn = fn;
    auto ratio = [&r](std::size_t num, std::size_t den) {
        if (den == 0) {
            r.undefined_ratio = true;
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    r.sn = ratio(tp, tp + fn);
    r.sp = ratio(tn, tn + fp);
    r.gmean = std::sqrt(r.sn * r.sp);
    r.acc = ratio(tp + tn, r.total());
    r.ppv = ratio(tp, tp + fp);
    if (r.ppv + r.sn > 0.0) {
        r.f1 = 2.0 * r.ppv * r.sn / (r.ppv + r.sn);
    } else {
        r.f1 = 0.0;
        r.undefined_ratio = true;
    }
    return r;
}

PerformanceReport compute_metrics(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size() || truth.empty()) {
        throw InvalidArgument("metrics need equal, non-zero numbers of predictions and labels");
    }
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] > 0) {
            (predicted[i] > 0 ? tp : fn)++;
        } else {
            (predicted[i] > 0 ? fp : tn)++;
        }
    }
    return metrics_from_counts(tp, tn, fp, fn);
}

void to_json(nlohmann::json& j, const PerformanceReport& r) {
    j = nlohmann::json{{"tp", r.tp},   {"tn", r.tn},   {"fp", r.fp},   {"fn", r.fn},
                       {"sn", r.sn},   {"sp", r.sp},   {"gmean", r.gmean}, {"acc", r.acc},
                       {"ppv", r.ppv}, {"f1", r.f1},   {"undefined_ratio", r.undefined_ratio},
                       {"level", r.level}};
}

}  // namespace mlsvm
