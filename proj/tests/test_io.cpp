#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "shadowrank/cli.hpp"
#include "shadowrank/io.hpp"
#include "shadowrank/serve.hpp"
#include "shadowrank/synth.hpp"
#include "support.hpp"

using namespace shadowrank;
using namespace shadowrank::testing;
namespace fs = std::filesystem;

namespace {

std::string write_to_string(const Dataset& d) {
  std::ostringstream out;
  write_dataset(d, out);
  return out.str();
}

Dataset read_from_string(const std::string& s) {
  std::istringstream in(s);
  return read_dataset(in, "<test>");
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("shadowrank_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
  static inline int counter_ = 0;
};

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args, const std::string& input = "") {
  args.insert(args.begin(), "shadowrank");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), in, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

Dataset small_synth(std::uint64_t seed = 3, std::size_t users = 40) {
  SynthConfig c;
  c.seed = seed;
  c.n_users = users;
  c.items = 30;
  c.ranks = 8;
  c.constraints = 2;
  c.dims = 4;
  return synth_generate(c);
}

// Topic a-vector over m1 items, every `stride`-th item a member.
std::vector<double> topic(std::size_t m1, std::size_t stride, std::size_t offset) {
  std::vector<double> a(m1, 0.0);
  for (std::size_t i = offset; i < m1; i += stride) a[i] = 1.0;
  return a;
}

ConstraintTableRow row(std::string label, Sense sense, double bound, BoundKind kind, std::vector<double> a) {
  ConstraintTableRow r;
  r.label = std::move(label);
  r.sense = sense;
  r.bound = bound;
  r.bound_kind = kind;
  r.shared_weights = std::move(a);
  return r;
}

double dcg_total(std::size_t ranks) {
  long double t = 0.0L;
  for (std::size_t j = 1; j <= ranks; ++j) t += 1.0L / std::log2(static_cast<long double>(j) + 1.0L);
  return static_cast<double>(t);
}

}  // namespace

TEST(Dataset, RoundTripSynthetic) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const Dataset d = small_synth(seed);
    EXPECT_EQ(read_from_string(write_to_string(d)), d);
  }
}

TEST(Dataset, RoundTripDenseAndOverrides) {
  std::ifstream f(std::string(SHADOWRANK_DATA_DIR) + "/worked_example.jsonl");
  ASSERT_TRUE(f);
  const Dataset fig = read_dataset(f, "worked_example.jsonl");
  EXPECT_TRUE(fig.header.dense);
  EXPECT_EQ(read_from_string(write_to_string(fig)), fig);
  const auto inst = to_canonical_instances(fig);
  ASSERT_EQ(inst.size(), 1u);
  EXPECT_EQ(*inst[0].dense_utility(), worked_u());
  EXPECT_EQ(*inst[0].constraints()[0].dense, worked_a());

  Dataset d = small_synth();
  d.users[0].weight_overrides = {std::vector<double>(30, 0.5), std::nullopt};
  const Dataset back = read_from_string(write_to_string(d));
  EXPECT_EQ(back, d);
  const auto a = make_instance(back.header, back.users[0]);
  EXPECT_EQ(a.constraints()[0].weights, std::vector<double>(30, 0.5));
  EXPECT_EQ(a.constraints()[1].weights, *d.header.constraints[1].shared_weights);
}

TEST(Dataset, SaveLoadFile) {
  TempDir dir;
  const Dataset d = small_synth();
  save_dataset(d, dir.file("d.jsonl"));
  EXPECT_EQ(read_dataset_file(dir.file("d.jsonl")), d);
  const auto inst = load_dataset(dir.file("d.jsonl"));
  ASSERT_EQ(inst.size(), d.users.size());
  for (std::size_t i = 1; i < inst.size(); ++i) EXPECT_LT(inst[i - 1].user_id(), inst[i].user_id());
  for (const auto& x : inst) EXPECT_TRUE(is_canonical(x));
}

TEST(Dataset, NoConstraintsAccepted) {
  Dataset d;
  d.header.items = 3;
  d.header.ranks = 2;
  d.header.dims = 1;
  UserRecord r;
  r.user_id = "a";
  r.utility = {1, 2, 3};
  r.covariates = {0.5};
  d.users.push_back(r);
  const Dataset back = read_from_string(write_to_string(d));
  EXPECT_EQ(back, d);
  EXPECT_TRUE(to_canonical_instances(back)[0].constraints().empty());
}

TEST(Dataset, ErrorsCarryLineAndField) {
  const std::string text = write_to_string(small_synth(3, 3));
  auto lines = lines_of(text);
  {
    auto bad = lines;
    auto j = nlohmann::json::parse(bad[2]);
    j["u"].erase(0);
    bad[2] = j.dump();
    std::string joined;
    for (const auto& l : bad) joined += l + "\n";
    try {
      read_from_string(joined);
      FAIL() << "expected DataError";
    } catch (const DataError& e) {
      const std::string msg = e.what();
      EXPECT_NE(msg.find("<test>:3"), std::string::npos) << msg;
      EXPECT_NE(msg.find("u"), std::string::npos) << msg;
    }
  }
  {
    auto bad = lines;
    bad[1] = "{not json";
    std::string joined;
    for (const auto& l : bad) joined += l + "\n";
    EXPECT_THROW(read_from_string(joined), DataError);
  }
  {
    auto j = nlohmann::json::parse(lines[0]);
    j["version"] = 99;
    std::string joined = j.dump() + "\n";
    try {
      read_from_string(joined);
      FAIL() << "expected DataError";
    } catch (const DataError& e) {
      EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
    }
  }
  {
    auto bad = lines;
    bad.push_back(bad[1]);
    std::string joined;
    for (const auto& l : bad) joined += l + "\n";
    EXPECT_THROW(read_from_string(joined), DataError);  // duplicate user_id
  }
  EXPECT_THROW(read_from_string(""), DataError);
}

TEST(Dataset, Table1aLoadsWithDcgResolvedBounds) {
  const std::size_t m = 1000;
  Dataset d;
  d.header.items = m;
  d.header.ranks = m;
  d.header.dims = 0;
  for (std::size_t k = 0; k < 4; ++k)
    d.header.constraints.push_back(row("topic" + std::to_string(k), Sense::kGreaterEqual, 0.015,
                                       BoundKind::kFractionOfTotalExposure, topic(m, 7, k)));
  std::vector<double> recency(m);
  for (std::size_t i = 0; i < m; ++i) recency[i] = (1960.0 + static_cast<double>(i % 60) - 1990.0) / 100.0;
  d.header.constraints.push_back(row("recency", Sense::kGreaterEqual, 0.0, BoundKind::kAbsolute, recency));
  UserRecord r;
  r.user_id = "viewer";
  r.utility.assign(m, 3.0);
  d.users.push_back(r);

  const auto inst = to_canonical_instances(read_from_string(write_to_string(d)));
  ASSERT_EQ(inst[0].num_constraints(), 5u);
  const double total = dcg_total(m);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(inst[0].constraints()[k].bound, 0.015 * total, 1e-9);
  EXPECT_EQ(inst[0].constraints()[4].bound, 0.0);
}

TEST(Dataset, Table1bLoadsWithSignFlips) {
  const std::size_t m = 1000;
  const double ge[] = {0.20, 0.15};
  const double le = 0.20;
  Dataset d;
  d.header.items = m;
  d.header.ranks = m;
  for (std::size_t k = 0; k < 8; ++k) {
    const bool is_ge = k < 2 || k == 7;
    const double b = k < 2 ? ge[k] : (k == 7 ? 0.02 : le);
    d.header.constraints.push_back(row("t" + std::to_string(k), is_ge ? Sense::kGreaterEqual : Sense::kLessEqual, b,
                                       BoundKind::kFractionOfTotalExposure, topic(m, 8, k)));
  }
  UserRecord r;
  r.user_id = "reader";
  r.utility.assign(m, 1.0);
  d.users.push_back(r);
  const auto inst = to_canonical_instances(read_from_string(write_to_string(d)));
  const double total = dcg_total(m);
  EXPECT_NEAR(inst[0].constraints()[0].bound, 0.20 * total, 1e-9);
  EXPECT_NEAR(inst[0].constraints()[1].bound, 0.15 * total, 1e-9);
  for (std::size_t k = 2; k < 7; ++k) {
    EXPECT_NEAR(inst[0].constraints()[k].bound, -0.20 * total, 1e-9);
    EXPECT_EQ(inst[0].constraints()[k].weights[k], -1.0);
  }
  EXPECT_NEAR(inst[0].constraints()[7].bound, 0.02 * total, 1e-9);
}

TEST(Dataset, CsvImport) {
  DatasetHeader h;
  h.items = 3;
  h.ranks = 2;
  h.dims = 1;
  h.constraints.push_back(row("t", Sense::kGreaterEqual, 0.2, BoundKind::kFractionOfTotalExposure, {1, 0, 0}));
  std::istringstream csv("user_id,x0,u0,u1,u2\nb,0.5,1,2,3\na,0.1,3,2,1\n");
  const Dataset d = import_utility_csv(csv, h);
  ASSERT_EQ(d.users.size(), 2u);
  EXPECT_EQ(d.users[0].user_id, "b");
  EXPECT_EQ(d.users[0].utility, (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(d.users[1].covariates, (std::vector<double>{0.1}));
  std::istringstream bad("user_id,x0,u0\nb,0.5,1\n");
  EXPECT_THROW(import_utility_csv(bad, h), DataError);
}

TEST(Synth, ByteIdenticalForSameSeed) {
  for (auto law : {LambdaLaw::kClustered, LambdaLaw::kLinear, LambdaLaw::kConstant}) {
    SynthConfig c;
    c.law = law;
    c.n_users = 50;
    c.utility_noise = 0.1;
    EXPECT_EQ(write_to_string(synth_generate(c)), write_to_string(synth_generate(c)));
    SynthConfig other = c;
    other.seed = 2;
    EXPECT_NE(write_to_string(synth_generate(c)), write_to_string(synth_generate(other)));
  }
}

TEST(Synth, KnownFirstDraws) {
  // SplitMix64 reference values for seed 0.
  SplitMix64 rng(0);
  EXPECT_EQ(rng.next(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(rng.next(), 0x6E789E6AA1B965F4ULL);
}

TEST(Synth, UtilitiesInRangeAndBindingFraction) {
  SynthConfig c;
  c.n_users = 100;
  c.binding_fraction = 0.3;
  const Dataset d = synth_generate(c);
  const auto inst = to_canonical_instances(d);
  std::size_t binding = 0;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    for (double v : inst[i].utility()) {
      EXPECT_GE(v, 1.0);
      EXPECT_LE(v, 5.0);
    }
    const std::vector<double> zero(inst[i].num_constraints(), 0.0);
    binding += !rank_with_lambda(inst[i], zero, 0.0).compliance.compliant;
    // The identity ranking is a feasibility witness.
    Assignment witness;
    for (std::size_t j = 0; j < inst[i].ranks(); ++j) witness.item_at_rank.push_back(static_cast<std::int32_t>(j));
    EXPECT_TRUE(evaluate_compliance(inst[i], witness).compliant);
  }
  EXPECT_EQ(binding, 30u);
}

TEST(Synth, RejectsImpossibleConfigs) {
  SynthConfig c;
  c.constraints = 0;
  c.binding_fraction = 0.5;
  EXPECT_THROW(synth_generate(c), DataError);
  SynthConfig d;
  d.items = 5;
  d.ranks = 10;
  EXPECT_THROW(synth_generate(d), DataError);
  SynthConfig e;
  e.binding_fraction = 1.5;
  EXPECT_THROW(synth_generate(e), DataError);
}

TEST(Report, CsvAndJson) {
  EvaluationReport empty;
  EXPECT_EQ(emit_report(empty, ReportFormat::kCsv),
            "strategy,n_users,compliance_probability,mean_utility,latency_p50_ms,latency_p95_ms,latency_p99_ms,"
            "latency_max_ms\n");
  EvaluationReport r;
  StrategyReport s;
  s.strategy = Strategy::kKnn;
  s.n_users = 7;
  s.compliance_probability = 0.857142857142857;
  s.mean_utility = 12.345678901234567;
  s.latency = {0.1, 0.2, 0.30000000000000004, 1.5};
  r.rows.push_back(s);
  s.strategy = Strategy::kMean;
  r.rows.push_back(s);
  const auto back = parse_report_json(emit_report(r, ReportFormat::kJson));
  ASSERT_EQ(back.rows.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.rows[i].strategy, r.rows[i].strategy);
    EXPECT_EQ(back.rows[i].n_users, r.rows[i].n_users);
    EXPECT_EQ(back.rows[i].compliance_probability, r.rows[i].compliance_probability);
    EXPECT_EQ(back.rows[i].mean_utility, r.rows[i].mean_utility);
    EXPECT_EQ(back.rows[i].latency.p99, r.rows[i].latency.p99);
    EXPECT_EQ(back.rows[i].latency.max, r.rows[i].latency.max);
  }
  const auto csv = lines_of(emit_report(r, ReportFormat::kCsv));
  ASSERT_EQ(csv.size(), 3u);
  EXPECT_EQ(csv[1].substr(0, 6), "knn,7,");
}

TEST(Artifact, RoundTrip) {
  const Dataset d = small_synth();
  TrainOptions o;
  o.predictor.standardize = true;
  ArtifactFile file{offline_train(to_canonical_instances(d), o), d.header};
  const ArtifactFile back = decode_artifact(encode_artifact(file));
  EXPECT_EQ(back.problem, file.problem);
  EXPECT_EQ(back.artifact.epsilon, file.artifact.epsilon);
  EXPECT_EQ(back.artifact.train_lambdas, file.artifact.train_lambdas);
  EXPECT_EQ(back.artifact.train_users, file.artifact.train_users);
  EXPECT_EQ(back.artifact.predictor_config.standardize, true);
  const std::vector<double> q{0.1, -0.2, 0.3, 0.0};
  EXPECT_EQ(back.artifact.predictor.predict(q), file.artifact.predictor.predict(q));
  EXPECT_EQ(back.artifact.mean_lambda, file.artifact.mean_lambda);
  EXPECT_THROW(decode_artifact("{}"), DataError);
  EXPECT_THROW(decode_artifact("not json"), DataError);
}

class Serving : public ::testing::Test {
 protected:
  void SetUp() override {
    data = small_synth(11, 60);
    file = ArtifactFile{offline_train(to_canonical_instances(data), TrainOptions{}), data.header};
  }
  Dataset data;
  ArtifactFile file;
};

TEST_F(Serving, OneResponsePerRequestInOrder) {
  std::string input;
  std::vector<std::string> kinds;
  for (std::size_t i = 0; i < 20; ++i) {
    if (i % 5 == 3) {
      input += "{broken\n";
      kinds.push_back("error");
    } else if (i % 5 == 4) {
      input += R"({"user_id":"short","u":[1,2],"x":[0,0,0,0]})" "\n";
      kinds.push_back("error:short");
    } else {
      input += encode_record(data.users[i]) + "\n";
      kinds.push_back(data.users[i].user_id);
    }
  }
  for (unsigned workers : {1u, 4u}) {
    std::istringstream in(input);
    std::ostringstream out;
    serve_stream(file, in, out, ServeOptions{Strategy::kKnn, workers});
    const auto responses = lines_of(out.str());
    ASSERT_EQ(responses.size(), kinds.size());
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      const auto j = nlohmann::json::parse(responses[i]);
      if (kinds[i] == "error") {
        EXPECT_TRUE(j.contains("error"));
      } else if (kinds[i] == "error:short") {
        EXPECT_TRUE(j.contains("error"));
        EXPECT_EQ(j["user_id"], "short");
      } else {
        EXPECT_EQ(j["user_id"], kinds[i]);
        EXPECT_EQ(j["items"].size(), data.header.ranks);
        EXPECT_EQ(j["slack"].size(), data.header.num_constraints());
        EXPECT_TRUE(j.contains("latency_ms"));
        EXPECT_TRUE(j.contains("compliant"));
      }
    }
  }
}

TEST_F(Serving, StrategyOverrideAndMatchesPipeline) {
  UserRecord r = data.users[0];
  auto j = nlohmann::json::parse(encode_record(r));
  j["strategy"] = "no_opt";
  const auto resp = nlohmann::json::parse(handle_request(file, j.dump(), Strategy::kKnn));
  EXPECT_EQ(resp["strategy"], "no_opt");
  const auto inst = normalize_constraints(make_instance(data.header, r));
  const auto expected = online_rank(file.artifact, inst, Strategy::kNoOpt);
  EXPECT_EQ(resp["items"].get<std::vector<std::int32_t>>(), expected.assignment.item_at_rank);
  j["strategy"] = "bogus";
  EXPECT_TRUE(nlohmann::json::parse(handle_request(file, j.dump(), Strategy::kKnn)).contains("error"));
}

TEST_F(Serving, TcpPortRoundTrip) {
  std::promise<std::uint16_t> bound;
  std::atomic<bool> stop{false};
  std::thread server([&] {
    serve_tcp(
        file, 0, ServeOptions{}, [&](std::uint16_t p) { bound.set_value(p); }, [&] { return stop.load(); });
  });
  const std::uint16_t port = bound.get_future().get();
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ASSERT_EQ(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  const std::string request = encode_record(data.users[0]) + "\n{bad\n" + encode_record(data.users[1]) + "\n";
  ASSERT_EQ(::send(fd, request.data(), request.size(), 0), static_cast<ssize_t>(request.size()));
  ::shutdown(fd, SHUT_WR);
  std::string received;
  char buf[4096];
  ssize_t n;
  while ((n = ::recv(fd, buf, sizeof buf, 0)) > 0) received.append(buf, static_cast<std::size_t>(n));
  ::close(fd);
  stop = true;
  server.join();
  const auto responses = lines_of(received);
  ASSERT_EQ(responses.size(), 3u);
  EXPECT_EQ(nlohmann::json::parse(responses[0])["user_id"], data.users[0].user_id);
  EXPECT_TRUE(nlohmann::json::parse(responses[1]).contains("error"));
  EXPECT_EQ(nlohmann::json::parse(responses[2])["user_id"], data.users[1].user_id);
}

TEST(Cli, EndToEndAndExitCodes) {
  TempDir dir;
  const auto train = dir.file("train.jsonl"), test = dir.file("test.jsonl"), art = dir.file("art.json");
  auto r = cli({"synth", "--seed", "5", "--users", "80", "--items", "30", "--ranks", "8", "--constraints", "2",
                "--dims", "4", "--holdout", "20", "--test-out", test, "-o", train});
  ASSERT_EQ(r.code, 0) << r.err;
  r = cli({"train", "-d", train, "-o", art, "--epsilon-grid", "0,0.0001,0.001", "--k-neighbors", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  r = cli({"bench", "-a", art, "-d", test, "--strategies", "no_opt,mean,knn,optimal", "--repeats", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines_of(r.out);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[1].substr(0, 7), "no_opt,");
  EXPECT_EQ(rows[4].substr(0, 8), "optimal,");
  r = cli({"bench", "-a", art, "-d", test, "--strategies", "knn", "--format", "json"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(parse_report_json(r.out).rows.size(), 1u);
  r = cli({"rank", "-a", art, "-d", test, "--strategy", "mean"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(lines_of(r.out).size(), 20u);

  const Dataset t = read_dataset_file(test);
  r = cli({"serve", "-a", art}, encode_record(t.users[0]) + "\n");
  ASSERT_EQ(r.code, 0);
  const auto resp = nlohmann::json::parse(lines_of(r.out).at(0));
  EXPECT_EQ(resp["items"].size(), 8u);
  EXPECT_EQ(resp["slack"].size(), 2u);
  EXPECT_TRUE(resp.contains("latency_ms"));

  EXPECT_EQ(cli({"synth", "--no-such-flag"}).code, kExitUsage);
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"bench", "-a", art, "-d", test, "--strategies", "fastest"}).code, kExitData);
  EXPECT_EQ(cli({"train", "-d", dir.file("missing.jsonl"), "-o", art}).code, kExitData);
  EXPECT_EQ(cli({"train", "-d", train, "-o", art, "--epsilon-grid", "x"}).code, kExitUsage);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
}

TEST(Cli, InfeasibleUsersSkippedOrFatal) {
  TempDir dir;
  Dataset d = small_synth(6, 10);
  // User 0 demands more exposure than exists for constraint 0.
  d.users[0].weight_overrides = {std::vector<double>(30, 0.0), std::nullopt};
  d.users[0].weight_overrides[0]->at(0) = 1e-6;
  save_dataset(d, dir.file("one_bad.jsonl"));
  auto r = cli({"train", "-d", dir.file("one_bad.jsonl"), "-o", dir.file("a.json"), "--k-neighbors", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  const auto art = load_artifact(dir.file("a.json"));
  EXPECT_EQ(art.artifact.skipped_users, (std::vector<std::string>{d.users[0].user_id}));

  Dataset all_bad = d;
  for (auto& u : all_bad.users) u.weight_overrides = d.users[0].weight_overrides;
  save_dataset(all_bad, dir.file("all_bad.jsonl"));
  r = cli({"train", "-d", dir.file("all_bad.jsonl"), "-o", dir.file("b.json"), "--k-neighbors", "3"});
  EXPECT_EQ(r.code, kExitInfeasible) << r.err;
}
