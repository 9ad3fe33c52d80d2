#include "mds/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "mds/error.hpp"

namespace mds {

std::string to_string(Partition p) {
    switch (p) {
        case Partition::Train: return "train";
        case Partition::Dev: return "dev";
        case Partition::Test: return "test";
    }
    return "train";
}

Partition partition_from_string(const std::string& s) {
    if (s == "train") return Partition::Train;
    if (s == "dev" || s == "devel" || s == "validation") return Partition::Dev;
    if (s == "test") return Partition::Test;
    throw InvalidArgument("unknown partition '" + s + "'");
}

void Recording::validate() const {
    features.validate();
    if (std::abs(features.fs - labels.fs()) > 1e-9 * labels.fs()) {
        throw ShapeMismatch("recording " + id + ": feature rate differs from label rate");
    }
    if (features.length() != labels.size()) {
        throw ShapeMismatch("recording " + id + ": " + std::to_string(features.length()) +
                            " frames but " + std::to_string(labels.size()) + " labels");
    }
}

std::vector<const Recording*> Dataset::partition(Partition p) const {
    std::vector<const Recording*> out;
    for (const auto& r : recordings) {
        if (r.partition == p) out.push_back(&r);
    }
    return out;
}

std::vector<std::string> Dataset::speakers() const {
    std::vector<std::string> out;
    for (const auto& r : recordings) {
        if (std::find(out.begin(), out.end(), r.speaker_id()) == out.end()) out.push_back(r.speaker_id());
    }
    return out;
}

std::vector<std::string> Dataset::speakers(Partition p) const {
    std::vector<std::string> out;
    for (const auto* r : partition(p)) {
        if (std::find(out.begin(), out.end(), r->speaker_id()) == out.end()) out.push_back(r->speaker_id());
    }
    return out;
}

void Dataset::validate() const {
    if (recordings.empty()) {
        throw InvalidArgument("dataset is empty");
    }
    for (const auto& r : recordings) {
        if (r.speaker_id().empty()) {
            throw InvalidArgument("recording " + r.id + " has no speaker id");
        }
        r.validate();
    }
}

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(std::string_view tok, std::size_t line) {
    while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r')) tok.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size() || tok.empty()) {
        throw ParseError("cannot parse number '" + std::string(tok) + "'", line);
    }
    if (!std::isfinite(v)) {
        throw ParseError("non-finite value", line);
    }
    return v;
}

std::map<std::string, std::string> parse_header(std::istream& in, std::size_t& line_no) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("missing header", 1);
    }
    line_no = 1;
    if (line.rfind('#', 0) != 0) {
        throw ParseError("missing header: first line must start with '#'", 1);
    }
    std::map<std::string, std::string> kv;
    std::istringstream ss(line.substr(1));
    std::string tok;
    while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) {
            throw ParseError("malformed header token '" + tok + "'", 1);
        }
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    if (!kv.contains("fs")) {
        throw ParseError("header lacks fs=<Hz>", 1);
    }
    return kv;
}

bool blank(const std::string& line) {
    return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

FeatureSequence read_features(std::istream& in) {
    std::size_t line_no = 0;
    const auto kv = parse_header(in, line_no);
    if (!kv.contains("dims")) {
        throw ParseError("feature header lacks dims=<D>", 1);
    }
    FeatureSequence f;
    f.fs = parse_double(kv.at("fs"), 1);
    const auto dims = static_cast<std::size_t>(parse_double(kv.at("dims"), 1));
    if (kv.contains("speaker")) f.speaker_id = kv.at("speaker");
    if (dims < 1) {
        throw ParseError("dims must be at least 1", 1);
    }
    std::vector<double> data;
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        std::size_t count = 0;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            data.push_back(parse_double(rest.substr(0, comma), line_no));
            ++count;
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (count != dims) {
            throw ParseError("expected " + std::to_string(dims) + " values, found " + std::to_string(count), line_no);
        }
        ++rows;
    }
    if (rows == 0) {
        throw ParseError("no frames", line_no);
    }
    f.frames = Matrix(rows, dims, std::move(data));
    f.validate();
    return f;
}

SampledSignal read_labels(std::istream& in) {
    std::size_t line_no = 0;
    const auto kv = parse_header(in, line_no);
    const double fs = parse_double(kv.at("fs"), 1);
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        values.push_back(parse_double(line, line_no));
    }
    if (values.empty()) {
        throw ParseError("no label values", line_no);
    }
    return SampledSignal(std::move(values), fs);
}

void write_features(std::ostream& out, const FeatureSequence& f) {
    out << "# fs=" << format_double(f.fs) << " dims=" << f.dims() << " speaker=" << f.speaker_id << '\n';
    for (std::size_t t = 0; t < f.length(); ++t) {
        const auto row = f.frames.row(t);
        for (std::size_t d = 0; d < row.size(); ++d) {
            if (d) out << ',';
            out << format_double(row[d]);
        }
        out << '\n';
    }
}

void write_labels(std::ostream& out, const SampledSignal& s) {
    out << "# fs=" << format_double(s.fs()) << '\n';
    for (double v : s.values()) {
        out << format_double(v) << '\n';
    }
}

FeatureSequence load_features(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_features(in);
}

SampledSignal load_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_labels(in);
}

void save_features(const std::filesystem::path& path, const FeatureSequence& f) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_features(out, f);
}

void save_labels(const std::filesystem::path& path, const SampledSignal& s) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_labels(out, s);
}

FeatureSequence stack_frames(const FeatureSequence& f, int k) {
    if (k < 1) {
        throw InvalidArgument("stack_frames: k must be >= 1");
    }
    const auto uk = static_cast<std::size_t>(k);
    const std::size_t rows = f.length() / uk;
    if (rows == 0) {
        throw InvalidArgument("stack_frames: fewer frames than the stacking factor");
    }
    FeatureSequence out;
    out.fs = f.fs / k;
    out.speaker_id = f.speaker_id;
    out.frames = Matrix(rows, uk * f.dims());
    for (std::size_t i = 0; i < rows; ++i) {
        auto dst = out.frames.row(i);
        for (std::size_t j = 0; j < uk; ++j) {
            const auto src = f.frames.row(i * uk + j);
            std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(j * f.dims()));
        }
    }
    return out;
}

Dataset znorm_per_speaker(const Dataset& dataset) {
    constexpr double kStdFloor = 1e-8;
    struct Moments {
        std::vector<double> sum;
        std::vector<double> sq;
        std::size_t n = 0;
    };
    std::map<std::string, Moments> by_speaker;
    for (const auto& r : dataset.recordings) {
        if (r.speaker_id().empty()) {
            throw InvalidArgument("znorm_per_speaker: recording " + r.id + " has unknown speaker");
        }
        auto& m = by_speaker[r.speaker_id()];
        if (m.sum.empty()) {
            m.sum.assign(r.features.dims(), 0.0);
        } else if (m.sum.size() != r.features.dims()) {
            throw ShapeMismatch("znorm_per_speaker: feature dims differ within speaker " + r.speaker_id());
        }
        for (std::size_t t = 0; t < r.features.length(); ++t) {
            const auto row = r.features.frames.row(t);
            for (std::size_t d = 0; d < row.size(); ++d) m.sum[d] += row[d];
        }
        m.n += r.features.length();
    }
    std::map<std::string, std::vector<double>> means;
    for (auto& [spk, m] : by_speaker) {
        if (m.n < 2) {
            throw InvalidArgument("znorm_per_speaker: speaker " + spk + " has fewer than two frames");
        }
        auto& mu = means[spk];
        mu.resize(m.sum.size());
        for (std::size_t d = 0; d < mu.size(); ++d) mu[d] = m.sum[d] / static_cast<double>(m.n);
        m.sq.assign(m.sum.size(), 0.0);
    }
    // Second pass for the variance about the mean.
    for (const auto& r : dataset.recordings) {
        auto& m = by_speaker[r.speaker_id()];
        const auto& mu = means[r.speaker_id()];
        for (std::size_t t = 0; t < r.features.length(); ++t) {
            const auto row = r.features.frames.row(t);
            for (std::size_t d = 0; d < row.size(); ++d) {
                const double c = row[d] - mu[d];
                m.sq[d] += c * c;
            }
        }
    }
    Dataset out = dataset;
    for (auto& r : out.recordings) {
        const auto& m = by_speaker[r.speaker_id()];
        const auto& mu = means[r.speaker_id()];
        std::vector<double> inv_sd(mu.size());
        for (std::size_t d = 0; d < mu.size(); ++d) {
            inv_sd[d] = 1.0 / std::max(std::sqrt(m.sq[d] / static_cast<double>(m.n)), kStdFloor);
        }
        for (std::size_t t = 0; t < r.features.length(); ++t) {
            auto row = r.features.frames.row(t);
            for (std::size_t d = 0; d < row.size(); ++d) row[d] = (row[d] - mu[d]) * inv_sd[d];
        }
    }
    return out;
}

FeatureSequence interleave_target(const FeatureSequence& target, const FeatureSequence& partner,
                                  const std::vector<bool>& active_mask) {
    if (target.length() != partner.length() || target.dims() != partner.dims()) {
        throw ShapeMismatch("interleave_target: target and partner shapes differ");
    }
    if (active_mask.size() != target.length()) {
        throw ShapeMismatch("interleave_target: mask length differs from frame count");
    }
    const std::size_t d = target.dims();
    FeatureSequence out;
    out.fs = target.fs;
    out.speaker_id = target.speaker_id;
    out.frames = Matrix(target.length(), 2 * d);
    for (std::size_t t = 0; t < target.length(); ++t) {
        auto dst = out.frames.row(t);
        if (active_mask[t]) {
            const auto src = target.frames.row(t);
            std::copy(src.begin(), src.end(), dst.begin());
        } else {
            const auto src = partner.frames.row(t);
            std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(d));
        }
    }
    return out;
}

}  // namespace mds
