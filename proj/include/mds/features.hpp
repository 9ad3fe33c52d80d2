#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "mds/feature_sequence.hpp"
#include "mds/signal.hpp"

namespace mds {

enum class Partition { Train, Dev, Test };

std::string to_string(Partition p);
Partition partition_from_string(const std::string& s);

/// Features paired with their annotation trace.
struct Recording {
    std::string id;
    FeatureSequence features;
    SampledSignal labels{std::vector<double>{0.0}, 1.0};
    Partition partition = Partition::Train;

    const std::string& speaker_id() const noexcept { return features.speaker_id; }
    /// Frame rate and length of features and labels agree.
    void validate() const;
};

struct Dataset {
    std::string task;                 ///< arousal | valence | synthetic
    std::vector<Recording> recordings;
    nlohmann::json metadata = nlohmann::json::object();

    std::vector<const Recording*> partition(Partition p) const;
    /// Speaker ids in first-appearance order.
    std::vector<std::string> speakers() const;
    std::vector<std::string> speakers(Partition p) const;
    void validate() const;
};

// CSV formats
//
//   features:  "# fs=<Hz> dims=<D> speaker=<id>" then one comma-separated frame per line
//   labels:    "# fs=<Hz>" then one value per line
//
// Values are written with 17 significant digits so text round-trips exactly.

FeatureSequence read_features(std::istream& in);
SampledSignal read_labels(std::istream& in);
void write_features(std::ostream& out, const FeatureSequence& f);
void write_labels(std::ostream& out, const SampledSignal& s);

FeatureSequence load_features(const std::filesystem::path& path);
SampledSignal load_labels(const std::filesystem::path& path);
void save_features(const std::filesystem::path& path, const FeatureSequence& f);
void save_labels(const std::filesystem::path& path, const SampledSignal& s);

/// Concatenates k consecutive frames: T' = floor(T/k), D' = k*D, fs' = fs/k.
/// Trailing frames that do not fill a group are dropped.
FeatureSequence stack_frames(const FeatureSequence& f, int k);

/// Per speaker and dimension: subtract the mean, divide by the population std
/// (std floored at 1e-8) using all frames of that speaker across recordings.
Dataset znorm_per_speaker(const Dataset& dataset);

/// Target/partner interleaving: output has 2D dims; where active_mask is true the
/// first half carries the target frame, otherwise the second half carries the partner frame.
FeatureSequence interleave_target(const FeatureSequence& target, const FeatureSequence& partner,
                                  const std::vector<bool>& active_mask);

}  // namespace mds
