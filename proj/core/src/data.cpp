#include "mlsvm/data.hpp"

#include "mlsvm/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

namespace mlsvm {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return fields;
}

std::optional<double> parse_double(std::string_view field) {
    double value = 0.0;
    if (!field.empty() && field.front() == '+') {
        field.remove_prefix(1);
    }
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc{} || ptr != end || field.empty() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

}  // namespace

void Normalization::apply(std::span<double> point) const {
    for (std::size_t j = 0; j < point.size(); ++j) {
        point[j] = stddev[j] > 0.0 ? (point[j] - mean[j]) / stddev[j] : 0.0;
    }
}

void Normalization::apply(Matrix& points) const {
    if (points.cols() != mean.size()) {
        throw InvalidArgument("normalization dimension mismatch");
    }
    for (std::size_t i = 0; i < points.rows(); ++i) {
        apply(points.row(i));
    }
}

std::size_t Dataset::count(int label) const noexcept {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

std::vector<std::size_t> Dataset::indices_of(int label) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == label) {
            out.push_back(i);
        }
    }
    return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.points = points.select_rows(indices);
    out.labels.reserve(indices.size());
    for (const auto i : indices) {
        out.labels.push_back(labels[i]);
    }
    out.normalization = normalization;
    return out;
}

void Dataset::validate() const {
    if (points.rows() != labels.size()) {
        throw InvalidArgument("point and label counts differ");
    }
    for (const int y : labels) {
        if (y != 1 && y != -1) {
            throw InvalidArgument("labels must be +1 or -1");
        }
    }
}

Dataset load_csv(const std::filesystem::path& path, int label_column, bool has_header) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(fmt::format("cannot open '{}'", path.string()));
    }

    Dataset d;
    std::string line;
    std::size_t row = 0;
    std::size_t expected_fields = 0;
    std::vector<double> features;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) {
            continue;
        }
        if (has_header && row == 1) {
            continue;
        }
        const auto fields = split_fields(line);
        if (expected_fields == 0) {
            expected_fields = fields.size();
            if (expected_fields < 2) {
                throw ParseError(fmt::format("row {}: need at least one feature and a label", row));
            }
        } else if (fields.size() != expected_fields) {
            throw ParseError(fmt::format("row {}: expected {} fields, found {}", row, expected_fields, fields.size()));
        }

        const long ncols = static_cast<long>(fields.size());
        const long label_at = label_column < 0 ? ncols + label_column : label_column;
        if (label_at < 0 || label_at >= ncols) {
            throw ParseError(fmt::format("row {}: label column {} out of range", row, label_column));
        }

        features.clear();
        int label = 0;
        for (long c = 0; c < ncols; ++c) {
            const auto value = parse_double(fields[static_cast<std::size_t>(c)]);
            if (c == label_at) {
                if (value == 1.0) {
                    label = 1;
                } else if (value == -1.0 || value == 0.0) {
                    label = -1;
                } else {
                    throw ParseError(fmt::format("row {}: label '{}' is not one of -1, 0, 1", row,
                                                 fields[static_cast<std::size_t>(c)]));
                }
                continue;
            }
            if (!value) {
                throw ParseError(fmt::format("row {}: non-numeric feature '{}' in column {}", row,
                                             fields[static_cast<std::size_t>(c)], c));
            }
            features.push_back(*value);
        }
        d.points.append_row(features);
        d.labels.push_back(label);
    }
    if (d.labels.empty()) {
        throw ParseError(fmt::format("'{}' contains no data rows", path.string()));
    }
    return d;
}

void write_csv(const Dataset& data, const std::filesystem::path& path, bool header) {
    std::ofstream out(path);
    if (!out) {
        throw Error(fmt::format("cannot write '{}'", path.string()));
    }
    if (header) {
        for (std::size_t j = 0; j < data.dims(); ++j) {
            out << 'x' << j << ',';
        }
        out << "label\n";
    }
    std::string buffer;
    for (std::size_t i = 0; i < data.size(); ++i) {
        buffer.clear();
        for (const double v : data.points.row(i)) {
            fmt::format_to(std::back_inserter(buffer), "{},", v);
        }
        fmt::format_to(std::back_inserter(buffer), "{}\n", data.labels[i]);
        out << buffer;
    }
}

Normalization fit_zscore(const Matrix& points) {
    const std::size_t n = points.rows();
    const std::size_t d = points.cols();
    Normalization norm{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    if (n == 0) {
        return norm;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            norm.mean[j] += points(i, j);
        }
    }
    for (auto& m : norm.mean) {
        m /= static_cast<double>(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = points(i, j) - norm.mean[j];
            norm.stddev[j] += diff * diff;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        norm.stddev[j] = std::sqrt(norm.stddev[j] / static_cast<double>(n));
        // spread at rounding-noise level counts as constant
        if (norm.stddev[j] <= 1e-300 || norm.stddev[j] <= 1e-14 * std::abs(norm.mean[j])) {
            norm.stddev[j] = 0.0;
        }
    }
    return norm;
}

Dataset zscore_normalize(const Dataset& d) {
    Dataset out = d;
    auto norm = fit_zscore(d.points);
    norm.apply(out.points);
    out.normalization = std::move(norm);
    return out;
}

std::vector<std::size_t> FoldAssignment::test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] == fold) {
            out.push_back(i);
        }
    }
    return out;
}

std::vector<std::size_t> FoldAssignment::train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] != fold) {
            out.push_back(i);
        }
    }
    return out;
}

FoldAssignment kfold_split(const Dataset& d, std::size_t k, std::uint64_t seed) {
    return kfold_split(std::span<const int>(d.labels), k, seed);
}

FoldAssignment kfold_split(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
    if (k < 2) {
        throw InvalidArgument("k-fold split needs k >= 2");
    }
    FoldAssignment folds{std::vector<std::size_t>(labels.size(), 0), k, seed};
    std::mt19937_64 rng(seed);
    std::size_t offset = 0;
    for (const int label : {1, -1}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == label) {
                members.push_back(i);
            }
        }
        if (members.size() < k) {
            throw InvalidArgument(fmt::format("class {} has {} samples, fewer than k = {}", label, members.size(), k));
        }
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t p = 0; p < members.size(); ++p) {
            folds.fold_of[members[p]] = (p + offset) % k;
        }
        // continue dealing where the previous class stopped so total fold sizes stay even
        offset = (offset + members.size()) % k;
    }
    return folds;
}

std::optional<SyntheticKind> parse_synthetic_kind(std::string_view name) {
    if (name == "twonorm") {
        return SyntheticKind::twonorm;
    }
    if (name == "ringnorm") {
        return SyntheticKind::ringnorm;
    }
    return std::nullopt;
}

namespace {

std::vector<int> shuffled_labels(std::size_t n, std::size_t positives, std::mt19937_64& rng) {
    std::vector<int> labels(n, -1);
    std::fill_n(labels.begin(), positives, 1);
    std::shuffle(labels.begin(), labels.end(), rng);
    return labels;
}

}  // namespace

Dataset gen_synthetic(SyntheticKind kind, std::size_t n, std::uint64_t seed) {
    if (n < 2) {
        throw InvalidArgument("synthetic data needs n >= 2");
    }
    constexpr std::size_t dims = 20;
    const double a = 2.0 / std::sqrt(static_cast<double>(dims));
    const double positive_share = kind == SyntheticKind::twonorm ? 3703.0 / 7400.0 : 3664.0 / 7400.0;
    auto positives = static_cast<std::size_t>(std::llround(positive_share * static_cast<double>(n)));
    positives = std::clamp<std::size_t>(positives, 1, n - 1);

    std::mt19937_64 rng(seed);
    Dataset d;
    d.labels = shuffled_labels(n, positives, rng);
    d.points = Matrix(n, dims);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto x = d.points.row(i);
        const bool positive = d.labels[i] == 1;
        for (auto& v : x) {
            const double z = normal(rng);
            if (kind == SyntheticKind::twonorm) {
                v = z + (positive ? a : -a);
            } else {
                v = positive ? z + a : 2.0 * z;
            }
        }
    }
    return d;
}

Dataset gen_gaussian_mixture(std::size_t n, double minority_fraction, std::size_t dims, double separation,
                             std::uint64_t seed) {
    if (n < 2 || dims == 0) {
        throw InvalidArgument("mixture needs n >= 2 and dims >= 1");
    }
    if (!(minority_fraction > 0.0 && minority_fraction < 1.0)) {
        throw InvalidArgument("minority fraction must lie in (0, 1)");
    }
    auto positives = static_cast<std::size_t>(std::llround(minority_fraction * static_cast<double>(n)));
    positives = std::clamp<std::size_t>(positives, 1, n - 1);
    const double shift = separation / std::sqrt(static_cast<double>(dims));

    std::mt19937_64 rng(seed);
    Dataset d;
    d.labels = shuffled_labels(n, positives, rng);
    d.points = Matrix(n, dims);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double centre = d.labels[i] == 1 ? shift : 0.0;
        for (auto& v : d.points.row(i)) {
            v = centre + normal(rng);
        }
    }
    return d;
}

}  // namespace mlsvm
