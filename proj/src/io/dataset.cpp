#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "json_util.hpp"
#include "shadowrank/io.hpp"

namespace shadowrank {

using nlohmann::json;

namespace {

constexpr std::string_view kDatasetFormat = "shadowrank-dataset";

std::string_view sense_token(Sense s) { return s == Sense::kGreaterEqual ? "GE" : "LE"; }
std::string_view bound_kind_token(BoundKind k) {
  return k == BoundKind::kAbsolute ? "absolute" : "fraction";
}

Sense parse_sense(const json& j, const detail::Where& at) {
  const std::string s = detail::get_string(j, at);
  if (s == "GE") return Sense::kGreaterEqual;
  if (s == "LE") return Sense::kLessEqual;
  throw at.error("expected GE or LE, got '" + s + "'");
}

BoundKind parse_bound_kind(const json& j, const detail::Where& at) {
  const std::string s = detail::get_string(j, at);
  if (s == "absolute") return BoundKind::kAbsolute;
  if (s == "fraction") return BoundKind::kFractionOfTotalExposure;
  throw at.error("expected absolute or fraction, got '" + s + "'");
}

}  // namespace

json detail::header_to_json(const DatasetHeader& h) {
  json j;
  j["format"] = kDatasetFormat;
  j["version"] = h.version;
  j["mode"] = h.dense ? "dense" : "factored";
  j["m1"] = h.items;
  j["m2"] = h.ranks;
  j["K"] = h.constraints.size();
  j["d"] = h.dims;
  if (h.gamma.dcg) {
    j["gamma"] = "DCG";
  } else {
    j["gamma"] = h.gamma.values;
  }
  json rows = json::array();
  for (const auto& c : h.constraints) {
    json row;
    row["label"] = c.label;
    row["sense"] = sense_token(c.sense);
    row["bound"] = c.bound;
    row["bound_kind"] = bound_kind_token(c.bound_kind);
    row["a"] = c.shared_weights ? json(*c.shared_weights) : json(nullptr);
    row["A"] = c.shared_dense ? detail::matrix_to_json(*c.shared_dense) : json(nullptr);
    rows.push_back(std::move(row));
  }
  j["constraints"] = std::move(rows);
  return j;
}

DatasetHeader detail::header_from_json(const json& j, const detail::Where& at) {
  if (!j.is_object()) throw at.error("header must be a JSON object");
  if (detail::get_string(detail::field(j, "format", at), at.sub("format")) != kDatasetFormat)
    throw at.sub("format").error("not a shadowrank dataset");
  DatasetHeader h;
  h.version = static_cast<int>(detail::get_size(detail::field(j, "version", at), at.sub("version")));
  if (h.version != kDatasetFormatVersion)
    throw at.sub("version").error("unknown format version " + std::to_string(h.version));
  const std::string mode = detail::get_string(detail::field(j, "mode", at), at.sub("mode"));
  if (mode != "dense" && mode != "factored") throw at.sub("mode").error("expected dense or factored");
  h.dense = mode == "dense";
  h.items = detail::get_size(detail::field(j, "m1", at), at.sub("m1"));
  h.ranks = detail::get_size(detail::field(j, "m2", at), at.sub("m2"));
  h.dims = detail::get_size(detail::field(j, "d", at), at.sub("d"));
  const std::size_t K = detail::get_size(detail::field(j, "K", at), at.sub("K"));
  if (h.ranks < 1 || h.items < h.ranks) throw at.error("need m1 >= m2 >= 1");

  const json& gamma = detail::field(j, "gamma", at);
  if (gamma.is_string()) {
    if (gamma.get<std::string>() != "DCG") throw at.sub("gamma").error("unknown discount token");
    h.gamma.dcg = true;
  } else {
    h.gamma.dcg = false;
    h.gamma.values = detail::get_vector(gamma, h.ranks, at.sub("gamma"));
  }
  try {
    (void)h.gamma.resolve(h.ranks);
  } catch (const DataError& e) {
    throw at.sub("gamma").error(e.what());
  }

  const json& rows = detail::field(j, "constraints", at);
  if (!rows.is_array() || rows.size() != K) throw at.sub("constraints").error("expected K rows");
  for (std::size_t k = 0; k < K; ++k) {
    const auto row_at = at.sub("constraints[" + std::to_string(k) + "]");
    const json& row = rows[k];
    if (!row.is_object()) throw row_at.error("expected an object");
    ConstraintTableRow c;
    c.label = detail::get_string(detail::field(row, "label", row_at), row_at.sub("label"));
    c.sense = parse_sense(detail::field(row, "sense", row_at), row_at.sub("sense"));
    c.bound = detail::get_number(detail::field(row, "bound", row_at), row_at.sub("bound"));
    c.bound_kind = parse_bound_kind(detail::field(row, "bound_kind", row_at), row_at.sub("bound_kind"));
    if (c.bound_kind == BoundKind::kFractionOfTotalExposure && (c.bound < 0.0 || c.bound > 1.0))
      throw row_at.sub("bound").error("fraction bound outside [0, 1]");
    if (row.contains("a") && !row["a"].is_null())
      c.shared_weights = detail::get_vector(row["a"], h.items, row_at.sub("a"));
    if (row.contains("A") && !row["A"].is_null())
      c.shared_dense = detail::get_matrix(row["A"], h.items, h.ranks, row_at.sub("A"));
    h.constraints.push_back(std::move(c));
  }
  return h;
}

namespace {

json record_to_json(const UserRecord& r) {
  json j;
  j["user_id"] = r.user_id;
  if (r.dense_utility) {
    j["U"] = detail::matrix_to_json(*r.dense_utility);
  } else {
    j["u"] = r.utility;
  }
  j["x"] = r.covariates;
  if (std::any_of(r.weight_overrides.begin(), r.weight_overrides.end(), [](const auto& o) { return o.has_value(); })) {
    json a = json::array();
    for (const auto& o : r.weight_overrides) a.push_back(o ? json(*o) : json(nullptr));
    j["a"] = std::move(a);
  }
  if (std::any_of(r.dense_overrides.begin(), r.dense_overrides.end(), [](const auto& o) { return o.has_value(); })) {
    json a = json::array();
    for (const auto& o : r.dense_overrides) a.push_back(o ? detail::matrix_to_json(*o) : json(nullptr));
    j["A"] = std::move(a);
  }
  return j;
}

UserRecord record_from_json(const json& j, const DatasetHeader& h, const detail::Where& at) {
  if (!j.is_object()) throw at.error("record must be a JSON object");
  UserRecord r;
  r.user_id = detail::get_string(detail::field(j, "user_id", at), at.sub("user_id"));
  const auto rec_at = at.sub("user '" + r.user_id + "'");
  if (h.dense) {
    r.dense_utility = detail::get_matrix(detail::field(j, "U", rec_at), h.items, h.ranks, rec_at.sub("U"));
  } else {
    r.utility = detail::get_vector(detail::field(j, "u", rec_at), h.items, rec_at.sub("u"));
  }
  r.covariates = detail::get_vector(detail::field(j, "x", rec_at), h.dims, rec_at.sub("x"));
  const std::size_t K = h.constraints.size();
  if (j.contains("a")) {
    const json& a = j["a"];
    if (!a.is_array() || a.size() != K) throw rec_at.sub("a").error("expected K entries");
    for (std::size_t k = 0; k < K; ++k) {
      if (a[k].is_null()) {
        r.weight_overrides.emplace_back();
      } else {
        r.weight_overrides.emplace_back(
            detail::get_vector(a[k], h.items, rec_at.sub("a[" + std::to_string(k) + "]")));
      }
    }
  }
  if (j.contains("A")) {
    const json& a = j["A"];
    if (!a.is_array() || a.size() != K) throw rec_at.sub("A").error("expected K entries");
    for (std::size_t k = 0; k < K; ++k) {
      if (a[k].is_null()) {
        r.dense_overrides.emplace_back();
      } else {
        r.dense_overrides.emplace_back(detail::get_matrix(a[k], h.items, h.ranks,
                                                          rec_at.sub("A[" + std::to_string(k) + "]")));
      }
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    const auto& c = h.constraints[k];
    const bool has_override = h.dense ? (k < r.dense_overrides.size() && r.dense_overrides[k].has_value())
                                      : (k < r.weight_overrides.size() && r.weight_overrides[k].has_value());
    const bool has_shared = h.dense ? c.shared_dense.has_value() : c.shared_weights.has_value();
    if (!has_override && !has_shared)
      throw rec_at.error("constraint '" + c.label + "' has neither a shared nor a per-user vector");
  }
  return r;
}

}  // namespace

DiscountVector GammaSpec::resolve(std::size_t ranks) const {
  if (dcg) return DiscountVector::dcg(ranks);
  if (values.size() != ranks) throw DataError("discount vector length != ranks");
  return DiscountVector(values);
}

void write_dataset(const Dataset& dataset, std::ostream& out) {
  out << detail::header_to_json(dataset.header).dump() << '\n';
  for (const auto& r : dataset.users) out << record_to_json(r).dump() << '\n';
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  write_dataset(dataset, out);
  if (!out) throw DataError("failed writing '" + path + "'");
}

Dataset read_dataset(std::istream& in, std::string_view source) {
  Dataset dataset;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const detail::Where at{std::string(source), line_no, ""};
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw at.error(std::string("parse error: ") + e.what());
    }
    if (!have_header) {
      dataset.header = detail::header_from_json(j, at);
      have_header = true;
      continue;
    }
    UserRecord r = record_from_json(j, dataset.header, at);
    if (!seen.insert(r.user_id).second) throw at.error("duplicate user_id '" + r.user_id + "'");
    dataset.users.push_back(std::move(r));
  }
  if (!have_header) throw DataError(std::string(source) + ": missing header line");
  return dataset;
}

Dataset read_dataset_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  return read_dataset(in, path);
}

RankingInstance make_instance(const DatasetHeader& header, const UserRecord& record) {
  DiscountVector gamma = header.gamma.resolve(header.ranks);
  std::vector<ConstraintSpec> constraints;
  for (std::size_t k = 0; k < header.constraints.size(); ++k) {
    const auto& row = header.constraints[k];
    ConstraintSpec c;
    c.label = row.label;
    c.sense = row.sense;
    c.bound = row.bound;
    c.bound_kind = row.bound_kind;
    if (header.dense) {
      const bool override = k < record.dense_overrides.size() && record.dense_overrides[k];
      if (!override && !row.shared_dense) throw DataError("constraint '" + row.label + "' has no matrix");
      c.dense = override ? *record.dense_overrides[k] : *row.shared_dense;
    } else {
      const bool override = k < record.weight_overrides.size() && record.weight_overrides[k];
      if (!override && !row.shared_weights) throw DataError("constraint '" + row.label + "' has no vector");
      c.weights = override ? *record.weight_overrides[k] : *row.shared_weights;
    }
    constraints.push_back(std::move(c));
  }
  if (header.dense) {
    if (!record.dense_utility) throw DataError("user '" + record.user_id + "': missing utility matrix");
    return RankingInstance::dense(record.user_id, *record.dense_utility, std::move(gamma),
                                  std::move(constraints), record.covariates);
  }
  return RankingInstance(record.user_id, record.utility, std::move(gamma), std::move(constraints),
                         record.covariates);
}

std::vector<RankingInstance> to_canonical_instances(const Dataset& dataset) {
  std::vector<const UserRecord*> order;
  for (const auto& r : dataset.users) order.push_back(&r);
  std::sort(order.begin(), order.end(),
            [](const UserRecord* a, const UserRecord* b) { return a->user_id < b->user_id; });
  std::vector<RankingInstance> out;
  out.reserve(order.size());
  for (const UserRecord* r : order) out.push_back(normalize_constraints(make_instance(dataset.header, *r)));
  return out;
}

std::vector<RankingInstance> load_dataset(const std::string& path) {
  return to_canonical_instances(read_dataset_file(path));
}

std::string encode_record(const UserRecord& record) { return record_to_json(record).dump(); }

UserRecord decode_record(std::string_view line, const DatasetHeader& header) {
  const detail::Where at{"<request>", 0, ""};
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("parse error: ") + e.what());
  }
  return record_from_json(j, header, at);
}

Dataset import_utility_csv(std::istream& in, const DatasetHeader& header) {
  if (header.dense) throw DataError("CSV import supports factored datasets only");
  Dataset dataset{header, {}};
  std::string line;
  std::size_t line_no = 0;
  bool skipped_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    const std::size_t expected = 1 + header.dims + header.items;
    if (cells.size() != expected)
      throw DataError("csv:" + std::to_string(line_no) + ": expected " + std::to_string(expected) +
                      " columns, got " + std::to_string(cells.size()));
    UserRecord r;
    r.user_id = cells[0];
    try {
      for (std::size_t c = 0; c < header.dims; ++c) r.covariates.push_back(std::stod(cells[1 + c]));
      for (std::size_t c = 0; c < header.items; ++c) r.utility.push_back(std::stod(cells[1 + header.dims + c]));
    } catch (const std::exception&) {
      throw DataError("csv:" + std::to_string(line_no) + ": malformed number");
    }
    dataset.users.push_back(std::move(r));
  }
  return dataset;
}

}  // namespace shadowrank
