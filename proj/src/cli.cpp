#include "shadowrank/cli.hpp"

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "shadowrank/io.hpp"
#include "shadowrank/serve.hpp"
#include "shadowrank/synth.hpp"

namespace shadowrank {

namespace {

std::vector<double> parse_number_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw CLI::ValidationError("--epsilon-grid", "not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

// Writes to `path`, or to `fallback` when path is empty or "-".
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw DataError("cannot open '" + path + "' for writing");
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

volatile std::sig_atomic_t g_stop = 0;
extern "C" void on_signal(int) { g_stop = 1; }

}  // namespace

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Constrained ranking with predicted shadow prices", "shadowrank"};
  app.require_subcommand(1);

  // synth
  SynthConfig synth;
  std::string synth_out;
  std::string law_name = "clustered";
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("-o,--out", synth_out, "Dataset file (default: stdout)");
  std::string synth_test_out;
  std::size_t synth_holdout = 0;
  synth_cmd->add_option("--holdout", synth_holdout, "Move the last N users to --test-out");
  synth_cmd->add_option("--test-out", synth_test_out, "Holdout dataset file");
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");
  synth_cmd->add_option("--users", synth.n_users, "Number of users");
  synth_cmd->add_option("--items", synth.items, "Items per user (m1)");
  synth_cmd->add_option("--ranks", synth.ranks, "Ranked positions (m2)");
  synth_cmd->add_option("--constraints", synth.constraints, "Number of topic constraints (K)");
  synth_cmd->add_option("--dims", synth.dims, "Covariate dimension (d)");
  synth_cmd->add_option("--law", law_name, "Lambda law")->check(CLI::IsMember({"clustered", "linear", "constant"}));
  synth_cmd->add_option("--binding-fraction", synth.binding_fraction, "Share of users with a binding constraint");
  synth_cmd->add_option("--clusters", synth.clusters, "Clusters under the clustered law");
  synth_cmd->add_option("--noise", synth.utility_noise, "Per-user utility jitter");
  synth_cmd->add_option("--exposure-share", synth.exposure_share, "Bound as a share of witness exposure");

  // train
  std::string train_data;
  std::string train_out;
  std::string epsilon_grid;
  TrainOptions train;
  std::string predictor_kind = "knn";
  auto* train_cmd = app.add_subcommand("train", "Solve training duals and fit the predictor");
  train_cmd->add_option("-d,--data", train_data, "Training dataset")->required();
  train_cmd->add_option("-o,--out", train_out, "Artifact file")->required();
  train_cmd->add_option("--epsilon-grid", epsilon_grid, "Comma-separated epsilon candidates");
  train_cmd->add_option("--k-neighbors", train.predictor.k, "Neighbors for KNN")->check(CLI::PositiveNumber);
  train_cmd->add_option("--predictor", predictor_kind, "Predictor kind")->check(CLI::IsMember({"knn", "mean", "zero"}));
  train_cmd->add_flag("--standardize", train.predictor.standardize, "Z-score covariates before neighbor search");
  train_cmd->add_option("--lambda-cap", train.dual.lambda_cap, "Upper bound on each shadow price");
  train_cmd->add_option("--max-iterations", train.dual.max_iterations, "Subgradient iteration limit");
  train_cmd->add_option("--threads", train.threads, "Worker threads for the dual solves");

  // rank
  std::string rank_artifact;
  std::string rank_data;
  std::string rank_out;
  std::string rank_strategy = "knn";
  auto* rank_cmd = app.add_subcommand("rank", "Rank every user in a dataset");
  rank_cmd->add_option("-a,--artifact", rank_artifact, "Artifact file")->required();
  rank_cmd->add_option("-d,--data", rank_data, "Dataset")->required();
  rank_cmd->add_option("-o,--out", rank_out, "Rankings file (default: stdout)");
  rank_cmd->add_option("--strategy", rank_strategy, "no_opt, optimal, mean or knn");

  // bench
  std::string bench_artifact;
  std::string bench_data;
  std::string bench_out;
  std::string bench_strategies = "no_opt,mean,knn,optimal";
  std::string bench_format = "csv";
  EvaluateOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Compliance, utility and latency per strategy");
  bench_cmd->add_option("-a,--artifact", bench_artifact, "Artifact file")->required();
  bench_cmd->add_option("-d,--data", bench_data, "Test dataset")->required();
  bench_cmd->add_option("-o,--out", bench_out, "Report file (default: stdout)");
  bench_cmd->add_option("--strategies", bench_strategies, "Comma-separated strategies");
  bench_cmd->add_option("--repeats", bench.repeats, "Timed repeats per user")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--format", bench_format, "Report format")->check(CLI::IsMember({"csv", "json"}));

  // serve
  std::string serve_artifact;
  std::string serve_strategy = "knn";
  int serve_port = -1;
  unsigned serve_workers = 1;
  auto* serve_cmd = app.add_subcommand("serve", "Answer ranking requests, one JSON object per line");
  serve_cmd->add_option("-a,--artifact", serve_artifact, "Artifact file")->required();
  serve_cmd->add_option("--strategy", serve_strategy, "Default strategy");
  serve_cmd->add_option("--port", serve_port, "TCP port on 127.0.0.1 (default: stdin/stdout)")
      ->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--workers", serve_workers, "Parallel workers (responses stay in order)")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) {
      synth.law = parse_lambda_law(law_name);
      if ((synth_holdout > 0) != !synth_test_out.empty())
        throw CLI::ValidationError("--holdout", "--holdout and --test-out go together");
      if (synth_holdout >= synth.n_users) throw CLI::ValidationError("--holdout", "must be below --users");
      Dataset all = synth_generate(synth);
      if (synth_holdout > 0) {
        Dataset test{all.header, {}};
        const auto split = all.users.end() - static_cast<std::ptrdiff_t>(synth_holdout);
        test.users.assign(std::make_move_iterator(split), std::make_move_iterator(all.users.end()));
        all.users.erase(split, all.users.end());
        save_dataset(test, synth_test_out);
      }
      Output o(synth_out, out);
      write_dataset(all, o.get());
    } else if (train_cmd->parsed()) {
      if (!epsilon_grid.empty()) train.dual.epsilon_grid = parse_number_list(epsilon_grid);
      train.predictor.kind = parse_predictor_kind(predictor_kind);
      train.dual.validate();
      train.warn = [&err](const std::string& message) { err << "warning: " << message << '\n'; };
      const Dataset dataset = read_dataset_file(train_data);
      const auto instances = to_canonical_instances(dataset);
      ArtifactFile file{offline_train(instances, train), dataset.header};
      save_artifact(file, train_out);
    } else if (rank_cmd->parsed()) {
      const Strategy strategy = parse_strategy(rank_strategy);
      const ArtifactFile file = load_artifact(rank_artifact);
      const Dataset dataset = read_dataset_file(rank_data);
      if (dataset.header != file.problem) throw DataError("dataset header does not match the artifact's problem");
      Output o(rank_out, out);
      for (const RankingInstance& inst : to_canonical_instances(dataset)) {
        const OnlineResult r = online_rank(file.artifact, inst, strategy);
        nlohmann::json line{{"user_id", inst.user_id()},
                            {"strategy", strategy_label(strategy)},
                            {"items", r.assignment.item_at_rank},
                            {"slack", r.compliance.slack},
                            {"compliant", r.compliance.compliant},
                            {"utility", r.compliance.utility},
                            {"latency_ms", r.latency_ms}};
        o.get() << line.dump() << '\n';
      }
    } else if (bench_cmd->parsed()) {
      const auto strategies = parse_strategy_list(bench_strategies);
      const ReportFormat format = parse_report_format(bench_format);
      const ArtifactFile file = load_artifact(bench_artifact);
      const Dataset dataset = read_dataset_file(bench_data);
      if (dataset.header != file.problem) throw DataError("dataset header does not match the artifact's problem");
      const auto instances = to_canonical_instances(dataset);
      const SpanSource source(instances);
      const EvaluationReport report = evaluate(file.artifact, source, strategies, bench);
      for (const auto& row : report.rows)
        if (row.failures > 0)
          err << "warning: " << strategy_label(row.strategy) << ": " << row.failures << " users failed\n";
      Output o(bench_out, out);
      o.get() << emit_report(report, format);
    } else if (serve_cmd->parsed()) {
      ServeOptions options;
      options.strategy = parse_strategy(serve_strategy);
      options.workers = serve_workers;
      const ArtifactFile file = load_artifact(serve_artifact);
      if (serve_port < 0) {
        serve_stream(file, in, out, options);
      } else {
        g_stop = 0;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        serve_tcp(
            file, static_cast<std::uint16_t>(serve_port), options,
            [&err](std::uint16_t port) { err << "listening on 127.0.0.1:" << port << std::endl; },
            [] { return g_stop != 0; });
      }
    }
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InfeasibleError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  out.flush();
  return kExitOk;
}

int run_cli(int argc, const char* const* argv) { return run_cli(argc, argv, std::cin, std::cout, std::cerr); }

}  // namespace shadowrank
