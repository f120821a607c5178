#include <fstream>
#include <sstream>

#include <json.hpp>

#include "json_util.hpp"
#include "shadowrank/io.hpp"

namespace shadowrank {

using nlohmann::json;

namespace {

constexpr std::string_view kArtifactFormat = "shadowrank-artifact";

std::string_view schedule_name(StepSchedule s) {
  return s == StepSchedule::kHarmonic ? "harmonic" : "polyak";
}

StepSchedule parse_schedule(const std::string& s, const detail::Where& at) {
  if (s == "harmonic") return StepSchedule::kHarmonic;
  if (s == "polyak") return StepSchedule::kPolyakEstimate;
  throw at.error("unknown step schedule '" + s + "'");
}

json dual_config_to_json(const DualConfig& c) {
  return {
      {"max_iterations", c.max_iterations},
      {"step_schedule", schedule_name(c.step_schedule)},
      {"step_scale", c.step_scale},
      {"tolerance", c.tolerance},
      {"patience", c.patience},
      {"lambda_cap", c.lambda_cap},
      {"polish_rounds", c.polish_rounds},
      {"compliance_tolerance", c.compliance_tolerance},
      {"epsilon_grid", c.epsilon_grid},
      {"greedy_threshold", c.assign_options.greedy_threshold},
      {"monge_tolerance", c.assign_options.monge_tolerance},
  };
}

DualConfig dual_config_from_json(const json& j, const detail::Where& at) {
  DualConfig c;
  c.max_iterations = static_cast<int>(detail::get_size(detail::field(j, "max_iterations", at), at.sub("max_iterations")));
  c.step_schedule = parse_schedule(detail::get_string(detail::field(j, "step_schedule", at), at), at.sub("step_schedule"));
  c.step_scale = detail::get_number(detail::field(j, "step_scale", at), at.sub("step_scale"));
  c.tolerance = detail::get_number(detail::field(j, "tolerance", at), at.sub("tolerance"));
  c.patience = static_cast<int>(detail::get_size(detail::field(j, "patience", at), at.sub("patience")));
  c.lambda_cap = detail::get_number(detail::field(j, "lambda_cap", at), at.sub("lambda_cap"));
  c.polish_rounds = static_cast<int>(detail::get_size(detail::field(j, "polish_rounds", at), at.sub("polish_rounds")));
  c.compliance_tolerance =
      detail::get_number(detail::field(j, "compliance_tolerance", at), at.sub("compliance_tolerance"));
  c.epsilon_grid = detail::get_vector(detail::field(j, "epsilon_grid", at), at.sub("epsilon_grid"));
  c.assign_options.greedy_threshold =
      detail::get_size(detail::field(j, "greedy_threshold", at), at.sub("greedy_threshold"));
  c.assign_options.monge_tolerance =
      detail::get_number(detail::field(j, "monge_tolerance", at), at.sub("monge_tolerance"));
  c.validate();
  return c;
}

std::vector<std::string> get_strings(const json& j, const detail::Where& at) {
  if (!j.is_array()) throw at.error("expected an array of strings");
  std::vector<std::string> out;
  for (const auto& s : j) out.push_back(detail::get_string(s, at));
  return out;
}

}  // namespace

std::string encode_artifact(const ArtifactFile& file) {
  const TrainedArtifact& a = file.artifact;
  const LambdaPredictor& p = a.predictor;
  json j;
  j["format"] = kArtifactFormat;
  j["version"] = a.format_version;
  j["epsilon"] = a.epsilon;
  j["constraints"] = a.constraints;
  j["dims"] = a.dims;
  j["mean_lambda"] = a.mean_lambda;
  j["train_lambdas"] = detail::matrix_to_json(a.train_lambdas);
  j["train_users"] = a.train_users;
  j["skipped_users"] = a.skipped_users;
  j["dual_config"] = dual_config_to_json(a.dual_config);
  j["predictor_config"] = {{"kind", predictor_name(a.predictor_config.kind)},
                           {"k", a.predictor_config.k},
                           {"standardize", a.predictor_config.standardize}};
  j["predictor"] = {{"kind", predictor_name(p.kind())},
                    {"k", p.k()},
                    {"dims", p.dims()},
                    {"train_x", detail::matrix_to_json(p.train_x())},
                    {"train_lambda", detail::matrix_to_json(p.train_lambda())},
                    {"mean_lambda", p.mean_lambda()},
                    {"center", p.center()},
                    {"spread", p.spread()}};
  j["problem"] = detail::header_to_json(file.problem);
  return j.dump();
}

ArtifactFile decode_artifact(std::string_view text) {
  const detail::Where at{"<artifact>", 0, ""};
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw at.error(std::string("parse error: ") + e.what());
  }
  if (!j.is_object() || detail::get_string(detail::field(j, "format", at), at.sub("format")) != kArtifactFormat)
    throw at.error("not a shadowrank artifact");
  ArtifactFile file;
  TrainedArtifact& a = file.artifact;
  a.format_version = static_cast<int>(detail::get_size(detail::field(j, "version", at), at.sub("version")));
  if (a.format_version != kArtifactFormatVersion)
    throw at.sub("version").error("unknown format version " + std::to_string(a.format_version));
  a.epsilon = detail::get_number(detail::field(j, "epsilon", at), at.sub("epsilon"));
  a.constraints = detail::get_size(detail::field(j, "constraints", at), at.sub("constraints"));
  a.dims = detail::get_size(detail::field(j, "dims", at), at.sub("dims"));
  a.mean_lambda = detail::get_vector(detail::field(j, "mean_lambda", at), a.constraints, at.sub("mean_lambda"));
  a.train_lambdas = detail::get_matrix(detail::field(j, "train_lambdas", at), at.sub("train_lambdas"));
  a.train_users = get_strings(detail::field(j, "train_users", at), at.sub("train_users"));
  a.skipped_users = get_strings(detail::field(j, "skipped_users", at), at.sub("skipped_users"));
  a.dual_config = dual_config_from_json(detail::field(j, "dual_config", at), at.sub("dual_config"));

  const auto pc_at = at.sub("predictor_config");
  const json& pc = detail::field(j, "predictor_config", at);
  a.predictor_config.kind = parse_predictor_kind(detail::get_string(detail::field(pc, "kind", pc_at), pc_at));
  a.predictor_config.k = static_cast<int>(detail::get_size(detail::field(pc, "k", pc_at), pc_at.sub("k")));
  a.predictor_config.standardize = detail::get_bool(detail::field(pc, "standardize", pc_at), pc_at.sub("standardize"));

  const auto p_at = at.sub("predictor");
  const json& p = detail::field(j, "predictor", at);
  a.predictor = LambdaPredictor::restore(
      parse_predictor_kind(detail::get_string(detail::field(p, "kind", p_at), p_at.sub("kind"))),
      static_cast<int>(detail::get_size(detail::field(p, "k", p_at), p_at.sub("k"))),
      detail::get_size(detail::field(p, "dims", p_at), p_at.sub("dims")),
      detail::get_matrix(detail::field(p, "train_x", p_at), p_at.sub("train_x")),
      detail::get_matrix(detail::field(p, "train_lambda", p_at), p_at.sub("train_lambda")),
      detail::get_vector(detail::field(p, "mean_lambda", p_at), p_at.sub("mean_lambda")),
      detail::get_vector(detail::field(p, "center", p_at), p_at.sub("center")),
      detail::get_vector(detail::field(p, "spread", p_at), p_at.sub("spread")));

  file.problem = detail::header_from_json(detail::field(j, "problem", at), at.sub("problem"));
  if (a.predictor.dims() != a.dims || a.predictor.outputs() != a.constraints ||
      file.problem.num_constraints() != a.constraints || file.problem.dims != a.dims)
    throw at.error("artifact dimensions are inconsistent");
  if (std::find(a.dual_config.epsilon_grid.begin(), a.dual_config.epsilon_grid.end(), a.epsilon) ==
      a.dual_config.epsilon_grid.end())
    throw at.sub("epsilon").error("epsilon is not in the configured grid");
  return file;
}

void save_artifact(const ArtifactFile& file, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << encode_artifact(file) << '\n';
  if (!out) throw DataError("failed writing '" + path + "'");
}

ArtifactFile load_artifact(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open artifact '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return decode_artifact(buffer.str());
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace shadowrank
