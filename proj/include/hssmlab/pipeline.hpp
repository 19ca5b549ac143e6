#pragma once

// Client/server classification workflow.
//
// Client side: tokenize, look up frozen word vectors, mean-pool into T chunks,
// project, normalize with training statistics, clip, encrypt. Server side:
// one of the sequence circuits with the public readout folded in. Client side
// again: decrypt slot 0 and threshold. `verify_exact_match` replays every
// validation example through a plaintext reference of the same formulas and
// reports whether the decisions agree.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hssmlab/cost_model.hpp"
#include "hssmlab/mock_ckks.hpp"
#include "hssmlab/report.hpp"
#include "hssmlab/seq_circuits.hpp"

namespace hssmlab {

/// Row-major dense matrix as a list of rows.
using Matrix = std::vector<std::vector<double>>;

struct VectorTable {
  std::size_t dimension = 0;
  std::unordered_map<std::string, std::vector<double>> entries;
  std::vector<std::string> warnings;

  const std::vector<double>* find(const std::string& token) const;
};

/// Word-vector text format: "count dim" header, then "token v1 ... vdim".
VectorTable parse_vectors(std::istream& in);
VectorTable load_vectors(const std::string& path);
/// Deterministic pseudo-embeddings (standard normal, seeded by token hash).
VectorTable hashed_vectors(const std::vector<std::string>& vocabulary, std::size_t dimension,
                           std::uint64_t seed);

std::vector<std::string> tokenize(std::string_view text);
/// `chunks` x dimension mean-pooled features; empty chunks are zero rows.
Matrix featurize(std::string_view text, const VectorTable& table, std::size_t chunks = 4);

struct ProjectionSpec {
  std::uint64_t seed = 0;
  std::size_t input_dim = 0;
  std::size_t output_width = 128;
  /// output_width x input_dim, row-major.
  std::vector<double> matrix;
  std::vector<double> train_mean;
  std::vector<double> train_std;
  double clip_bound = 0.75;
};

inline constexpr double kStdFloor = 1e-6;

ProjectionSpec fit_projection(const std::vector<Matrix>& train_features, std::uint64_t seed,
                              std::size_t output_width = 128, double clip_bound = 0.75);
Matrix project_clip(const Matrix& chunks, const ProjectionSpec& spec);

struct ReadoutModel {
  std::vector<double> weights;
  double bias = 0.0;
  double lambda = 1.0;

  double score(std::span<const double> x) const;
};

/// Ridge regression on {0,1} labels mapped to {-1,+1}. Features and targets
/// are centered, so the bias absorbs the means.
ReadoutModel fit_ridge(const Matrix& X, const std::vector<int>& labels, double lambda = 1.0);

struct DatasetRow {
  int label = 0;
  std::string text;
};

struct DatasetSplit {
  std::string name;
  std::vector<DatasetRow> rows;
};

/// "label<TAB>text" per line, no header.
DatasetSplit parse_dataset_tsv(std::istream& in, std::string name);
DatasetSplit load_dataset_tsv(const std::string& path);

struct SyntheticDataset {
  DatasetSplit train;
  DatasetSplit valid;
  std::vector<std::string> vocabulary;
};

/// Short reviews over a "goodN"/"badN"/"neutralN" vocabulary. Each label
/// draws mostly from its own sentiment words, so a linear readout separates
/// the classes with a wide margin.
SyntheticDataset synthetic_dataset(std::uint64_t seed, std::size_t n_train = 400,
                                   std::size_t n_valid = 200);

struct PipelineConfig {
  CircuitKind kind = CircuitKind::HssmClosed;
  std::uint64_t seed = 7;
  std::size_t chunks = 4;
  std::size_t width = 128;
  double lambda = 1.0;
  double feature_clip = 0.75;
  double decay = 0.5;
  std::vector<double> decays{0.1, 0.25, 0.5, 0.75, 0.9, 0.98};
  /// Decrypt the state and apply the readout on the client instead.
  bool client_side_readout = false;
  SimParams profile = SimParams::pipeline_profile();
};

struct TrainedPipeline {
  PipelineConfig config;
  ProjectionSpec spec;
  HssmParams hssm;
  AttnParams attn;
  /// Folded readout as applied to the model's plaintext feature vector.
  ReadoutModel readout;
};

TrainedPipeline train_pipeline(const DatasetSplit& train, const VectorTable& table,
                               const PipelineConfig& config);

/// Client-side featurize + project + clip.
Matrix client_features(std::string_view text, const VectorTable& table,
                       const TrainedPipeline& model);

/// Readout input in exact double arithmetic: h_T, the concatenated decay
/// bank, or the attention output.
std::vector<double> plaintext_features(const Matrix& chunks, const TrainedPipeline& model);
double plaintext_score(const Matrix& chunks, const TrainedPipeline& model);

struct InferenceResult {
  /// Score in slot 0 (every slot when the readout is folded). Invalid when
  /// the circuit ran out of levels.
  CtVector score;
  /// Server state instead of a score when the readout runs on the client.
  bool needs_client_readout = false;
  RunReport report;
  StepTrace trace;
  OpLedger server_ledger;
};

/// Client encryption of the chunks, then the server circuit. Throws
/// std::logic_error if the server segment encrypts or decrypts anything.
InferenceResult run_encrypted_inference(Context& ctx, const Matrix& chunks,
                                        const TrainedPipeline& model);

int decrypt_threshold(Context& ctx, const CtVector& score, double threshold = 0.0);
/// Client-side score: slot 0, or the readout applied to a decrypted state.
double client_score(Context& ctx, const InferenceResult& inference, const TrainedPipeline& model);

struct ExampleOutcome {
  std::size_t index = 0;
  int label = 0;
  double plain_score = 0.0;
  double encrypted_score = 0.0;
  int plain_decision = 0;
  int encrypted_decision = 0;
};

struct MatchReport {
  std::string dataset;
  std::string model;
  std::size_t n = 0;
  double match_fraction = 1.0;
  double max_score_delta = 0.0;
  double min_plain_margin = 0.0;
  double plain_accuracy = 0.0;
  double encrypted_accuracy = 0.0;
  OpLedger ledger;
  int final_level = 0;
  int final_degree = 0;
  std::size_t exhausted = 0;
  std::vector<ExampleOutcome> examples;
};

MatchReport verify_exact_match(const DatasetSplit& dataset, const VectorTable& table,
                               const TrainedPipeline& model);

std::string match_report_json(const MatchReport& report, int indent = 2);
void write_match_examples_csv(std::ostream& out, const MatchReport& report);

}  // namespace hssmlab
