#pragma once

#include <string>

#include "dcpose/synth.hpp"

namespace dcpose::dataset_io {

// Single-file archive: a text manifest ("key = value" lines grouped into
// [sections]) with the counts, skeleton, per-sample labels and split
// membership, followed by a "[rasters]" marker and the images as flat binary
// little-endian 32-bit floats, one record per sample in manifest order.
void save_dataset(const synth::DiverseDataset& data, const std::string& path);

synth::DiverseDataset load_dataset(const std::string& path);

}  // namespace dcpose::dataset_io
