#pragma once

// Measurement archive: archive.json (dataset settings, positions, file list)
// with one time-series CSV "t,z" and one envelope CSV "d,e" per position.

#include <filesystem>
#include <json.hpp>
#include <vector>

#include "revert/ugw.hpp"

namespace revert::cli {

struct Archive {
    ugw::GridDatasetSpec spec;
    std::vector<Eigen::Vector2d> positions;
    std::vector<ugw::EnvelopeSignal> envelopes;
};

nlohmann::json ugw_config_json(const ugw::UgwConfig& c);

// Returns the files written, archive.json first.
std::vector<std::filesystem::path> write_archive(const std::filesystem::path& dir,
                                                 const ugw::GridDataset& data);
Archive read_archive(const std::filesystem::path& dir);

}  // namespace revert::cli
