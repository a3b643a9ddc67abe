#pragma once

// JSON file formats for instances, witness sets and solutions, and the TSV
// layout of the degree table. Complex numbers are [re, im] pairs written with
// round-trip precision.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/pipeline.hpp"
#include "core/slices.hpp"
#include "core/witness.hpp"

namespace trifocal {

using Json = nlohmann::json;

struct InstanceFile {
  ProblemWeights problem;
  std::uint64_t seed = 0;
  Instance correspondences;
};

Json instance_to_json(const InstanceFile& f);
InstanceFile instance_from_json(const Json& j);

/// Trifocal witness sets only (the parametrization must be a
/// TrifocalParametrization).
Json witness_to_json(const PseudoWitnessSet& pws, const Json& options = Json::object());
PseudoWitnessSet witness_from_json(const Json& j);
/// FNV-1a hash of the patches and slice, in hex.
std::string witness_content_hash(const PseudoWitnessSet& pws);

struct StoredSolution {
  std::optional<std::array<cplx, 13>> params;
  std::array<Camera, 3> cameras;
  std::optional<TrifocalTensor> tensor;
  bool is_real = false;
  double membership_residual = 0.0;
  double worst_multiview = 0.0;
};

StoredSolution stored_from_record(const SolutionRecord& rec);

struct SolutionFile {
  InstanceFile instance;
  std::array<size_t, kStageCount> stage_counts{};
  size_t paths = 0;
  size_t failed_paths = 0;
  std::vector<StoredSolution> solutions;
  Json meta = Json::object();
};

Json solutions_to_json(const SolutionFile& f);
SolutionFile solutions_from_json(const Json& j);

/// Header and rows of the degree table: the five counts, the computed degree,
/// the expected degree and a match flag, then the filter stage counts.
std::string table_header();
std::string table_row(const ProblemRun& run);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

Json complex_to_json(cplx z);
cplx complex_from_json(const Json& j);

}  // namespace trifocal
