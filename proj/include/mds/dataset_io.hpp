#pragma once

#include <filesystem>

#include "mds/features.hpp"

namespace mds {

// On-disk layout of a dataset directory:
//
//   dataset.json               task, metadata and the recording index
//   <id>.features.csv          features-io CSV
//   <id>.labels.csv            labels-io CSV
//
// dataset.json:
//   { "task": str, "metadata": {...},
//     "recordings": [ {"id", "speaker", "partition", "features", "labels"}, ... ] }
// "features" / "labels" are paths relative to the directory.

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace mds
