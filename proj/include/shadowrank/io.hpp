#pragma once

// File formats.
//
// Dataset: JSON Lines. Line 1 is the header (dimensions, discount spec and
// the constraint table); every following line is one user record. Shared
// constraint vectors live in the table; a record may override them per
// constraint index.
//
// Artifact: one JSON document holding the trained predictor, tuned epsilon,
// training labels, configuration snapshot and the dataset header needed to
// rebuild instances at serving time.

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shadowrank/model.hpp"
#include "shadowrank/pipeline.hpp"

namespace shadowrank {

inline constexpr int kDatasetFormatVersion = 1;

/// Either the DCG token or explicit weights.
struct GammaSpec {
  bool dcg = true;
  std::vector<double> values;

  DiscountVector resolve(std::size_t ranks) const;
  friend bool operator==(const GammaSpec&, const GammaSpec&) = default;
};

struct ConstraintTableRow {
  std::string label;
  Sense sense = Sense::kGreaterEqual;
  double bound = 0.0;
  BoundKind bound_kind = BoundKind::kAbsolute;
  std::optional<std::vector<double>> shared_weights;  // factored datasets
  std::optional<Matrix> shared_dense;                  // dense datasets

  friend bool operator==(const ConstraintTableRow&, const ConstraintTableRow&) = default;
};

struct DatasetHeader {
  int version = kDatasetFormatVersion;
  bool dense = false;
  std::size_t items = 0;       // m1
  std::size_t ranks = 0;       // m2
  std::size_t dims = 0;        // d
  GammaSpec gamma;
  std::vector<ConstraintTableRow> constraints;  // K rows

  std::size_t num_constraints() const { return constraints.size(); }
  friend bool operator==(const DatasetHeader&, const DatasetHeader&) = default;
};

struct UserRecord {
  std::string user_id;
  std::vector<double> utility;       // factored
  std::optional<Matrix> dense_utility;
  std::vector<double> covariates;
  // Per-constraint overrides; empty or K entries, nullopt = use the table.
  std::vector<std::optional<std::vector<double>>> weight_overrides;
  std::vector<std::optional<Matrix>> dense_overrides;

  friend bool operator==(const UserRecord&, const UserRecord&) = default;
};

struct Dataset {
  DatasetHeader header;
  std::vector<UserRecord> users;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

void write_dataset(const Dataset& dataset, std::ostream& out);
void save_dataset(const Dataset& dataset, const std::string& path);

/// Parses and validates. Errors carry "<source>:<line>: <field>: ..." context.
Dataset read_dataset(std::istream& in, std::string_view source = "<stream>");
Dataset read_dataset_file(const std::string& path);

/// Builds the (uncanonicalized) instance for one record.
RankingInstance make_instance(const DatasetHeader& header, const UserRecord& record);

/// Canonical instances ordered by user_id.
std::vector<RankingInstance> to_canonical_instances(const Dataset& dataset);
std::vector<RankingInstance> load_dataset(const std::string& path);

/// Serve-protocol and dataset record codec (one JSON object per line).
std::string encode_record(const UserRecord& record);
UserRecord decode_record(std::string_view line, const DatasetHeader& header);

/// CSV shim: header `user_id,x0..x{d-1},u0..u{m1-1}`; the caller supplies the
/// problem header (discounts and constraint table).
Dataset import_utility_csv(std::istream& in, const DatasetHeader& header);

struct ArtifactFile {
  TrainedArtifact artifact;
  DatasetHeader problem;
};

std::string encode_artifact(const ArtifactFile& file);
ArtifactFile decode_artifact(std::string_view text);
void save_artifact(const ArtifactFile& file, const std::string& path);
ArtifactFile load_artifact(const std::string& path);

enum class ReportFormat { kCsv, kJson };
ReportFormat parse_report_format(std::string_view name);

/// Columns: strategy, n_users, compliance_probability, mean_utility,
/// latency_p50_ms, latency_p95_ms, latency_p99_ms, latency_max_ms.
std::string emit_report(const EvaluationReport& report, ReportFormat format);
EvaluationReport parse_report_json(std::string_view text);

}  // namespace shadowrank
