#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "icssl/manifolds.hpp"

namespace icssl {

nlohmann::json spec_to_json(const ManifoldSpec& spec);
ManifoldSpec spec_from_json(const nlohmann::json& j);

// Episode document: {spec, seed, n, m, C, points (row-major), d, labels,
// true_labels, center}. Doubles are written shortest-round-trip, so
// episode_from_json(episode_to_json(e)) reproduces e exactly.
nlohmann::json episode_to_json(const Episode& ep);
Episode episode_from_json(const nlohmann::json& j);

void write_episode(const Episode& ep, const std::filesystem::path& path);
Episode read_episode(const std::filesystem::path& path);

// Point-cloud CSV with header x0,...,x{d-1},label where label -1 marks an
// unlabeled point. Imported episodes carry no ground truth: true_labels
// mirrors labels.
Episode read_point_cloud_csv(const std::filesystem::path& path, int num_classes = 2);
void write_point_cloud_csv(const Episode& ep, const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace icssl
