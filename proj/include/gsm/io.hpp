#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gsm/alignment.hpp"
#include "gsm/gappy.hpp"
#include "gsm/pod.hpp"
#include "gsm/testbed.hpp"

namespace gsm::io {

std::uint64_t fnv1a64(std::string_view bytes);

// Hash of the canonical serialization (sorted keys, compact separators) of
// doc with any "hash" member removed. 16 lowercase hex digits.
std::string content_hash(nlohmann::json doc);

// Stamps doc["hash"] and writes the document, pretty-printed, to path.
// Returns the stamped hash.
std::string write_artifact(const std::string& path, nlohmann::json doc);

// Parses path and verifies the recorded hash against the content. Throws
// ConfigError on unreadable or malformed files, StaleArtifact when the
// content no longer matches its hash.
nlohmann::json read_artifact(const std::string& path);

nlohmann::json to_json(const VectorXd& v);
nlohmann::json to_json(const MatrixXd& m);
VectorXd vector_from(const nlohmann::json& a);
MatrixXd matrix_from(const nlohmann::json& a);

// A database directory holds manifest.json (domain, entry list with content
// hashes, current transformations), one entry_XXX.json per member (family
// parameters plus the distortion it is observed through), and family.json
// (generation seed and the exact aligning transformations, kept for tests).
struct DatabaseDir {
  SyntheticDatabase synthetic;
  std::vector<TransformQ> transforms;  // current alignment state
  bool aligned = false;
  std::string manifest_hash;
  std::uint64_t seed = 0;

  // Entries paired with the current transformations.
  AlignedDatabase database() const;
};

void write_database(const std::string& dir, const SyntheticDatabase& db,
                    std::uint64_t seed);
DatabaseDir load_database(const std::string& dir);

// Rewrites the manifest with new transformations (marking it aligned) and
// returns the new manifest hash. Downstream artifacts recording the old
// hash become stale.
std::string update_transforms(const std::string& dir,
                              const std::vector<TransformQ>& transforms);

std::string write_pod(const std::string& path, const PodBasis& basis,
                      const std::string& db_hash);
// Rebuilds the basis against db. Throws StaleArtifact when the recorded
// database hash does not match.
PodBasis load_pod(const std::string& path, const DatabaseDir& db);

std::string write_gsm(const std::string& path,
                      const GenericSurrogateModel& model,
                      const std::string& db_hash, const std::string& pod_hash);
GenericSurrogateModel load_gsm(const std::string& path, const PodBasis& basis,
                               const std::string& db_hash,
                               const std::string& pod_hash);

// Numeric CSV with dim+1 columns per row (point coordinates, then the
// value). Lines whose first field does not parse as a number are skipped,
// so a header line is allowed.
SampleSet read_samples_csv(const std::string& path, int dim);

// printf %.17g: deterministic and round-trip exact.
std::string format_double(double v);

}  // namespace gsm::io
