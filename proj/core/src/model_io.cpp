#include "mlsvm/model_io.hpp"

#include "mlsvm/error.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

namespace mlsvm {

namespace {

std::string join(std::span<const double> values) {
    return fmt::format("{}", fmt::join(values, " "));
}

void write_model(std::ostream& out, const SvmModel& m) {
    out << "model\n";
    out << fmt::format("gamma {}\nC {}\nweights {} {}\nbias {}\nlevel {}\n", m.gamma, m.C, m.weight_positive,
                       m.weight_negative, m.bias, m.level);
    out << fmt::format("sv {}\n", m.support_vector_count());
    for (std::size_t i = 0; i < m.support_vector_count(); ++i) {
        out << fmt::format("{} {}\n", m.coefficients[i], join(m.support_vectors.row(i)));
    }
}

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    // Next non-empty line split into whitespace-separated tokens.
    std::vector<std::string> line() {
        std::string text;
        while (std::getline(in_, text)) {
            ++number_;
            std::istringstream ss(text);
            std::vector<std::string> tokens{std::istream_iterator<std::string>(ss), {}};
            if (!tokens.empty()) {
                return tokens;
            }
        }
        fail("unexpected end of model file");
    }

    std::vector<std::string> keyed(std::string_view key, std::size_t values) {
        auto tokens = line();
        if (tokens.front() != key || (values != kAny && tokens.size() != values + 1)) {
            fail(fmt::format("expected '{}' with {} value(s)", key, values));
        }
        return tokens;
    }

    double number(const std::string& token) {
        double value = 0.0;
        const auto* end = token.data() + token.size();
        const auto [ptr, ec] = std::from_chars(token.data(), end, value);
        if (ec != std::errc() || ptr != end) {
            fail(fmt::format("'{}' is not a number", token));
        }
        return value;
    }

    std::size_t count(const std::string& token) {
        std::size_t value = 0;
        const auto* end = token.data() + token.size();
        const auto [ptr, ec] = std::from_chars(token.data(), end, value);
        if (ec != std::errc() || ptr != end) {
            fail(fmt::format("'{}' is not a count", token));
        }
        return value;
    }

    std::vector<double> numbers(const std::vector<std::string>& tokens, std::size_t from) {
        std::vector<double> out;
        for (std::size_t i = from; i < tokens.size(); ++i) {
            out.push_back(number(tokens[i]));
        }
        return out;
    }

    std::vector<double> vector_line(std::string_view key, std::size_t dims) {
        return numbers(keyed(key, dims), 1);
    }

    [[noreturn]] void fail(const std::string& message) const {
        throw ParseError(fmt::format("model file line {}: {}", number_, message));
    }

    static constexpr std::size_t kAny = static_cast<std::size_t>(-1);

private:
    std::istream& in_;
    std::size_t number_ = 0;
};

SvmModel read_model(Reader& r, std::size_t dims) {
    r.keyed("model", 0);
    SvmModel m;
    m.gamma = r.number(r.keyed("gamma", 1)[1]);
    m.C = r.number(r.keyed("C", 1)[1]);
    const auto w = r.keyed("weights", 2);
    m.weight_positive = r.number(w[1]);
    m.weight_negative = r.number(w[2]);
    m.bias = r.number(r.keyed("bias", 1)[1]);
    m.level = r.count(r.keyed("level", 1)[1]);
    const std::size_t svs = r.count(r.keyed("sv", 1)[1]);
    m.support_vectors = Matrix(0, dims);
    std::vector<double> data;
    data.reserve(svs * dims);
    for (std::size_t i = 0; i < svs; ++i) {
        const auto tokens = r.line();
        if (tokens.size() != dims + 1) {
            r.fail(fmt::format("support vector line has {} values, expected {}", tokens.size(), dims + 1));
        }
        m.coefficients.push_back(r.number(tokens[0]));
        for (std::size_t j = 1; j < tokens.size(); ++j) {
            data.push_back(r.number(tokens[j]));
        }
    }
    m.support_vectors = Matrix(svs, dims, std::move(data));
    return m;
}

std::size_t predictor_dims(const Predictor& p) {
    if (const auto* m = std::get_if<SvmModel>(&p)) {
        return m->dims();
    }
    const auto& e = std::get<ModelEnsemble>(p);
    return e.members.empty() ? 0 : e.members.front().midpoint.size();
}

}  // namespace

void write_classifier(std::ostream& out, const TrainedClassifier& c) {
    const bool ensemble = std::holds_alternative<ModelEnsemble>(c.predictor);
    const std::size_t dims =
        c.normalization ? c.normalization->mean.size() : predictor_dims(c.predictor);
    out << kModelMagic << '\n';
    out << "mode " << (ensemble ? "ensemble" : "single") << '\n';
    out << "dims " << dims << '\n';
    if (c.normalization) {
        out << "normalization 1\n";
        out << "mean " << join(c.normalization->mean) << '\n';
        out << "stddev " << join(c.normalization->stddev) << '\n';
    } else {
        out << "normalization 0\n";
    }
    out << "chosen_level " << c.chosen_level << '\n';
    if (!ensemble) {
        out << "models 1\n";
        write_model(out, std::get<SvmModel>(c.predictor));
    } else {
        const auto& e = std::get<ModelEnsemble>(c.predictor);
        out << "voting " << to_string(e.rule) << '\n';
        out << "models " << e.members.size() << '\n';
        for (const auto& member : e.members) {
            write_model(out, member.model);
            out << "positive_centroid " << join(member.positive_centroid) << '\n';
            out << "negative_centroid " << join(member.negative_centroid) << '\n';
            out << fmt::format("volumes {} {}\n", member.positive_volume, member.negative_volume);
            out << "midpoint " << join(member.midpoint) << '\n';
        }
    }
    out << "end\n";
}

void save_classifier(const std::filesystem::path& path, const TrainedClassifier& c) {
    std::ofstream out(path);
    if (!out) {
        throw Error(fmt::format("cannot write model file {}", path.string()));
    }
    write_classifier(out, c);
    if (!out) {
        throw Error(fmt::format("failed writing model file {}", path.string()));
    }
}

TrainedClassifier read_classifier(std::istream& in) {
    Reader r(in);
    const auto magic = r.line();
    if (magic.size() != 1 || magic[0] != kModelMagic) {
        r.fail(fmt::format("unsupported model format '{}', expected {}", magic.front(), kModelMagic));
    }
    const auto mode = r.keyed("mode", 1)[1];
    if (mode != "single" && mode != "ensemble") {
        r.fail(fmt::format("unknown mode '{}'", mode));
    }
    const std::size_t dims = r.count(r.keyed("dims", 1)[1]);
    TrainedClassifier c;
    const auto normalized = r.keyed("normalization", 1)[1];
    if (normalized == "1") {
        Normalization n;
        n.mean = r.vector_line("mean", dims);
        n.stddev = r.vector_line("stddev", dims);
        c.normalization = std::move(n);
    } else if (normalized != "0") {
        r.fail("normalization flag must be 0 or 1");
    }
    c.chosen_level = r.count(r.keyed("chosen_level", 1)[1]);
    if (mode == "single") {
        if (r.count(r.keyed("models", 1)[1]) != 1) {
            r.fail("single mode holds exactly one model");
        }
        c.predictor = read_model(r, dims);
    } else {
        ModelEnsemble e;
        const auto voting = parse_voting_rule(r.keyed("voting", 1)[1]);
        if (!voting) {
            r.fail("unknown voting rule");
        }
        e.rule = *voting;
        const std::size_t models = r.count(r.keyed("models", 1)[1]);
        if (models == 0) {
            r.fail("ensemble without models");
        }
        for (std::size_t m = 0; m < models; ++m) {
            EnsembleMember member;
            member.model = read_model(r, dims);
            member.positive_centroid = r.vector_line("positive_centroid", dims);
            member.negative_centroid = r.vector_line("negative_centroid", dims);
            const auto volumes = r.keyed("volumes", 2);
            member.positive_volume = r.number(volumes[1]);
            member.negative_volume = r.number(volumes[2]);
            member.midpoint = r.vector_line("midpoint", dims);
            e.members.push_back(std::move(member));
        }
        c.predictor = std::move(e);
    }
    r.keyed("end", 0);
    return c;
}

TrainedClassifier load_classifier(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(fmt::format("cannot open model file {}", path.string()));
    }
    return read_classifier(in);
}

}  // namespace mlsvm
