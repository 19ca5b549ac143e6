#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "hssmlab/errors.hpp"
#include "hssmlab/pipeline.hpp"
#include "oracles.hpp"

using namespace hssmlab;

namespace {

VectorTable toy_table() {
  std::istringstream in(
      "3 2\n"
      "good 1.0 0.0\n"
      "movie 0.0 1.0\n"
      "bad -1.0 0.5\n");
  return parse_vectors(in);
}

}  // namespace

TEST_CASE("vector file parsing") {
  const VectorTable t = toy_table();
  CHECK(t.dimension == 2);
  CHECK(t.entries.size() == 3);
  CHECK(t.warnings.empty());
  REQUIRE(t.find("bad") != nullptr);
  CHECK((*t.find("bad"))[1] == 0.5);
  CHECK(t.find("ugly") == nullptr);

  std::istringstream dup("2 2\nx 1 2\nx 3 4\n");
  const VectorTable d = parse_vectors(dup);
  CHECK(d.entries.size() == 1);
  CHECK((*d.find("x"))[0] == 3.0);
  CHECK(d.warnings.size() == 1);

  std::istringstream short_row("1 3\nx 1 2\n");
  CHECK_THROWS_AS(parse_vectors(short_row), DimensionMismatch);
  std::istringstream bad_num("1 2\nx 1 abc\n");
  CHECK_THROWS_AS(parse_vectors(bad_num), ParseError);
  std::istringstream no_header("");
  CHECK_THROWS_AS(parse_vectors(no_header), ParseError);
  CHECK_THROWS_AS(load_vectors("/nonexistent/vectors.vec"), MissingInput);
}

TEST_CASE("tokenize and featurize") {
  CHECK(tokenize("Good movie!") == std::vector<std::string>{"good", "movie"});
  CHECK(tokenize("  ...  ").empty());
  const VectorTable t = toy_table();
  const Matrix f = featurize("Good movie!", t, 4);
  REQUIRE(f.size() == 4);
  CHECK(f[0] == std::vector<double>{1.0, 0.0});
  CHECK(f[1] == std::vector<double>{0.0, 1.0});
  CHECK(f[2] == std::vector<double>{0.0, 0.0});
  CHECK(f[3] == std::vector<double>{0.0, 0.0});

  const Matrix one = featurize("good bad unknown", t, 1);
  CHECK(one[0] == std::vector<double>{0.0, 0.25});
  CHECK_THROWS_AS(featurize("x", t, 0), InvalidParams);
}

TEST_CASE("hashed vectors are deterministic per token") {
  const auto a = hashed_vectors({"alpha", "beta"}, 16, 3);
  const auto b = hashed_vectors({"beta", "alpha", "gamma"}, 16, 3);
  CHECK(*a.find("alpha") == *b.find("alpha"));
  CHECK(*a.find("alpha") != *a.find("beta"));
  const auto c = hashed_vectors({"alpha"}, 16, 4);
  CHECK(*a.find("alpha") != *c.find("alpha"));
}

TEST_CASE("projection uses training statistics and clips") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 2.0);
  std::vector<Matrix> train(30, Matrix(4, std::vector<double>(16)));
  for (auto& m : train)
    for (auto& r : m)
      for (double& v : r) v = g(rng);
  const ProjectionSpec a = fit_projection(train, 11, 32, 0.75);
  const ProjectionSpec b = fit_projection(train, 11, 32, 0.75);
  CHECK(a.matrix == b.matrix);
  CHECK(a.train_mean == b.train_mean);
  CHECK(fit_projection(train, 12, 32, 0.75).matrix != a.matrix);

  double max_abs = 0.0;
  std::vector<double> mean(32, 0.0);
  std::size_t rows = 0;
  for (const auto& m : train) {
    for (const auto& r : project_clip(m, a)) {
      REQUIRE(r.size() == 32);
      for (std::size_t i = 0; i < 32; ++i) {
        max_abs = std::max(max_abs, std::abs(r[i]));
        mean[i] += r[i];
      }
      ++rows;
    }
  }
  CHECK(max_abs <= 0.75);
  for (double m : mean) CHECK(std::abs(m / static_cast<double>(rows)) < 0.2);

  std::vector<Matrix> constant(5, Matrix(2, std::vector<double>(16, 1.0)));
  CHECK_THROWS_AS(fit_projection(constant, 1), DegenerateTraining);
  CHECK_THROWS_AS(project_clip(Matrix(1, std::vector<double>(3)), a), ShapeMismatch);
}

TEST_CASE("ridge matches the augmented normal equations") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix X(50, std::vector<double>(8));
  std::vector<int> y(50);
  for (std::size_t i = 0; i < 50; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 8; ++j) {
      X[i][j] = g(rng);
      s += X[i][j] * (j % 2 ? 1.0 : -0.5);
    }
    y[i] = s + 0.3 * g(rng) > 0 ? 1 : 0;
  }
  for (double lambda : {0.1, 1.0, 10.0}) {
    const ReadoutModel m = fit_ridge(X, y, lambda);
    const auto o = oracle::ridge(X, y, lambda);
    for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(m.weights[j] - o.w[j]) < 1e-9);
    CHECK(std::abs(m.bias - o.b) < 1e-9);
  }
  CHECK_THROWS_AS(fit_ridge(X, y, -1.0), InvalidParams);
  Matrix dup(4, std::vector<double>{1.0, 1.0});
  CHECK_THROWS_AS(fit_ridge(dup, {0, 1, 0, 1}, 0.0), SingularSystem);
}

TEST_CASE("dataset TSV") {
  std::istringstream in("1\tgreat film\n0\tdull\n");
  const DatasetSplit d = parse_dataset_tsv(in, "toy");
  REQUIRE(d.rows.size() == 2);
  CHECK(d.rows[0].label == 1);
  CHECK(d.rows[1].text == "dull");
  std::istringstream bad("2\tx\n");
  CHECK_THROWS_AS(parse_dataset_tsv(bad, "bad"), ParseError);
  CHECK_THROWS_AS(load_dataset_tsv("/nonexistent.tsv"), MissingInput);

  const SyntheticDataset s = synthetic_dataset(7, 40, 20);
  CHECK(s.train.rows.size() == 40);
  CHECK(s.valid.rows.size() == 20);
  CHECK(synthetic_dataset(7, 40, 20).train.rows[3].text == s.train.rows[3].text);
}

TEST_CASE("decrypt threshold ties go positive") {
  Context c(SimParams::reference_profile());
  CHECK(decrypt_threshold(c, c.encrypt(std::vector<double>(8, 0.0))) == 1);
  CHECK(decrypt_threshold(c, c.encrypt(std::vector<double>(8, -1e-9))) == 0);
  CHECK(decrypt_threshold(c, c.encrypt(std::vector<double>(8, 0.2)), 0.3) == 0);
}

TEST_CASE("encrypted inference reproduces the plaintext score") {
  const SyntheticDataset ds = synthetic_dataset(7, 120, 30);
  const VectorTable table = hashed_vectors(ds.vocabulary, 64, 7);
  for (auto kind : {CircuitKind::HssmClosed, CircuitKind::HssmMulti, CircuitKind::AttnFinalToken,
                    CircuitKind::AttnFullSequence}) {
    PipelineConfig cfg;
    cfg.kind = kind;
    const TrainedPipeline model = train_pipeline(ds.train, table, cfg);
    const MatchReport rep = verify_exact_match(ds.valid, table, model);
    CAPTURE(kind_name(kind));
    CHECK(rep.match_fraction == 1.0);
    CHECK(rep.max_score_delta < 1e-9);
    CHECK(rep.exhausted == 0);
    CHECK(rep.ledger.clip_events == 0);
    CHECK(rep.examples.size() == 30);

    // Text with no known tokens gives all-zero chunks.
    const Matrix empty = client_features("zzz qqq", table, model);
    Context ctx(cfg.profile);
    const InferenceResult r = run_encrypted_inference(ctx, empty, model);
    CHECK(std::abs(client_score(ctx, r, model) - plaintext_score(empty, model)) < 1e-9);
    CHECK(r.server_ledger.encrypt_count == 0);
    CHECK(r.server_ledger.decrypt_count == 0);
  }

  PipelineConfig naive;
  naive.kind = CircuitKind::Naive;
  CHECK_THROWS_AS(train_pipeline(ds.train, table, naive), InvalidParams);
}

TEST_CASE("client-side readout") {
  const SyntheticDataset ds = synthetic_dataset(3, 80, 20);
  const VectorTable table = hashed_vectors(ds.vocabulary, 64, 3);
  PipelineConfig cfg;
  cfg.client_side_readout = true;
  const TrainedPipeline model = train_pipeline(ds.train, table, cfg);
  const MatchReport rep = verify_exact_match(ds.valid, table, model);
  CHECK(rep.match_fraction == 1.0);
}

TEST_CASE("match report JSON") {
  MatchReport r;
  r.dataset = "d";
  r.model = "hssm-closed";
  r.n = 2;
  r.ledger.mul_ct_ct = 6;
  r.ledger.encrypt_count = 2;
  const auto j = nlohmann::json::parse(match_report_json(r));
  for (const char* key : {"dataset", "model", "n", "match_fraction", "max_score_delta", "ledger",
                          "final_level", "final_degree", "server_op_share"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["ledger"]["mul_ct_ct"] == 6);
  CHECK(j["server_op_share"].get<double>() == doctest::Approx(0.75));

  r.examples.push_back({0, 1, 0.5, 0.5, 1, 1});
  std::ostringstream csv;
  write_match_examples_csv(csv, r);
  CHECK(csv.str() == "index,label,plain_score,encrypted_score,plain_decision,encrypted_decision\n"
                     "0,1,0.5,0.5,1,1\n");
}
