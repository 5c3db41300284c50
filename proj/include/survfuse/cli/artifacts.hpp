#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "survfuse/analysis.hpp"

namespace survfuse::cli {

inline constexpr int kArtifactSchemaVersion = 1;

struct ArtifactMetadata {
  std::uint64_t seed = 0;
  std::string data_fingerprint;
  std::string config_fingerprint;
};

/// A saved study model: its kind plus every component needed to score raw records.
struct ModelArtifact {
  StudyModel kind = StudyModel::Pesi;
  StudyArtifacts components;
  ArtifactMetadata metadata;
};

/// Keeps only the components `kind` depends on.
ModelArtifact make_artifact(const StudyArtifacts& all, StudyModel kind, const ArtifactMetadata& metadata);

nlohmann::json artifact_to_json(const ModelArtifact& artifact);
/// Throws SchemaMismatch on an unsupported schema_version or malformed body,
/// UnknownModelKind on an unrecognized model_kind.
ModelArtifact artifact_from_json(const nlohmann::json& j);

void save_artifact(const ModelArtifact& artifact, const std::filesystem::path& path);
ModelArtifact load_artifact(const std::filesystem::path& path);

/// FNV-1a 64 over ids and labels, as 16 hex digits.
std::string data_fingerprint(const Dataset& ds);
std::string fnv1a_hex(std::string_view bytes);

}  // namespace survfuse::cli
