#include "hssmlab/pipeline.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "hssmlab/errors.hpp"

namespace hssmlab {

// ---------------------------------------------------------------------------
// Word vectors

const std::vector<double>* VectorTable::find(const std::string& token) const {
  const auto it = entries.find(token);
  return it == entries.end() ? nullptr : &it->second;
}

VectorTable parse_vectors(std::istream& in) {
  VectorTable table;
  std::string line;
  std::size_t lineno = 0;
  std::size_t declared = 0;
  std::size_t rows = 0;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream ss(line);
    if (table.dimension == 0) {
      long long count = -1;
      long long dim = -1;
      std::string extra;
      if (!(ss >> count >> dim) || (ss >> extra) || count < 0 || dim <= 0) {
        throw ParseError(lineno, "expected header \"count dim\"");
      }
      declared = static_cast<std::size_t>(count);
      table.dimension = static_cast<std::size_t>(dim);
      continue;
    }
    std::string token;
    ss >> token;
    std::vector<double> values;
    std::string field;
    while (ss >> field) {
      double v = 0.0;
      std::size_t used = 0;
      try {
        v = std::stod(field, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != field.size() || !std::isfinite(v)) {
        throw ParseError(lineno, "non-numeric component '" + field + "'");
      }
      values.push_back(v);
    }
    if (values.size() != table.dimension) {
      throw DimensionMismatch(lineno, "expected " + std::to_string(table.dimension) +
                                          " components, got " + std::to_string(values.size()));
    }
    if (table.entries.contains(token)) {
      table.warnings.push_back("line " + std::to_string(lineno) + ": duplicate token '" + token +
                               "', keeping the last occurrence");
    }
    table.entries[token] = std::move(values);
    ++rows;
  }
  if (table.dimension == 0) {
    throw ParseError(lineno == 0 ? 1 : lineno, "missing header");
  }
  if (declared != rows) {
    table.warnings.push_back("header declares " + std::to_string(declared) + " vectors, found " +
                             std::to_string(rows));
  }
  return table;
}

VectorTable load_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw MissingInput("cannot open vector file '" + path + "'");
  }
  return parse_vectors(in);
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

VectorTable hashed_vectors(const std::vector<std::string>& vocabulary, std::size_t dimension,
                           std::uint64_t seed) {
  if (dimension == 0) {
    throw InvalidParams("embedding dimension must be positive");
  }
  VectorTable table;
  table.dimension = dimension;
  for (const auto& token : vocabulary) {
    std::mt19937_64 rng(fnv1a(token) ^ (seed * 0x9E3779B97F4A7C15ULL));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(dimension);
    for (double& x : v) x = normal(rng);
    table.entries[token] = std::move(v);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Featurization

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (c >= 0x80 || std::isalnum(c)) {
      current.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Matrix featurize(std::string_view text, const VectorTable& table, std::size_t chunks) {
  if (chunks == 0) {
    throw InvalidParams("chunk count must be positive");
  }
  const auto tokens = tokenize(text);
  Matrix out(chunks, std::vector<double>(table.dimension, 0.0));
  const std::size_t base = tokens.size() / chunks;
  const std::size_t extra = tokens.size() % chunks;
  std::size_t pos = 0;
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t len = base + (c < extra ? 1 : 0);
    std::size_t found = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (const auto* v = table.find(tokens[i])) {
        for (std::size_t d = 0; d < table.dimension; ++d) out[c][d] += (*v)[d];
        ++found;
      }
    }
    if (found > 0) {
      for (double& x : out[c]) x /= static_cast<double>(found);
    }
    pos += len;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Projection

namespace {

std::vector<double> project_row(const ProjectionSpec& spec, std::span<const double> f) {
  std::vector<double> out(spec.output_width, 0.0);
  for (std::size_t r = 0; r < spec.output_width; ++r) {
    const double* row = spec.matrix.data() + r * spec.input_dim;
    double acc = 0.0;
    for (std::size_t c = 0; c < spec.input_dim; ++c) acc += row[c] * f[c];
    out[r] = acc;
  }
  return out;
}

}  // namespace

ProjectionSpec fit_projection(const std::vector<Matrix>& train_features, std::uint64_t seed,
                              std::size_t output_width, double clip_bound) {
  std::vector<const std::vector<double>*> rows;
  for (const auto& ex : train_features) {
    for (const auto& r : ex) rows.push_back(&r);
  }
  if (rows.empty() || rows.front()->empty()) {
    throw DegenerateTraining("no training features");
  }
  const std::size_t dim = rows.front()->size();
  for (const auto* r : rows) {
    if (r->size() != dim) throw ShapeMismatch("training features differ in dimension");
  }
  if (std::all_of(rows.begin(), rows.end(), [&](const auto* r) { return *r == *rows.front(); })) {
    throw DegenerateTraining("all training features are identical");
  }
  if (output_width == 0 || !(clip_bound > 0.0)) {
    throw InvalidParams("projection needs a positive width and clip bound");
  }

  ProjectionSpec spec;
  spec.seed = seed;
  spec.input_dim = dim;
  spec.output_width = output_width;
  spec.clip_bound = clip_bound;
  spec.matrix.resize(output_width * dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& m : spec.matrix) m = normal(rng) * scale;

  std::vector<double> sum(output_width, 0.0);
  std::vector<double> sq(output_width, 0.0);
  std::vector<std::vector<double>> projected;
  projected.reserve(rows.size());
  for (const auto* r : rows) projected.push_back(project_row(spec, *r));
  const double n = static_cast<double>(projected.size());
  for (const auto& p : projected) {
    for (std::size_t i = 0; i < output_width; ++i) sum[i] += p[i];
  }
  spec.train_mean.resize(output_width);
  for (std::size_t i = 0; i < output_width; ++i) spec.train_mean[i] = sum[i] / n;
  for (const auto& p : projected) {
    for (std::size_t i = 0; i < output_width; ++i) {
      const double d = p[i] - spec.train_mean[i];
      sq[i] += d * d;
    }
  }
  spec.train_std.resize(output_width);
  for (std::size_t i = 0; i < output_width; ++i) {
    spec.train_std[i] = std::max(std::sqrt(sq[i] / n), kStdFloor);
  }
  return spec;
}

Matrix project_clip(const Matrix& chunks, const ProjectionSpec& spec) {
  Matrix out;
  out.reserve(chunks.size());
  for (const auto& f : chunks) {
    if (f.size() != spec.input_dim) {
      throw ShapeMismatch("feature dimension does not match the projection");
    }
    auto p = project_row(spec, f);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double z = (p[i] - spec.train_mean[i]) / spec.train_std[i];
      p[i] = std::clamp(z, -spec.clip_bound, spec.clip_bound);
    }
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ridge readout

double ReadoutModel::score(std::span<const double> x) const {
  double acc = bias;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += weights[i] * x[i];
  return acc;
}

ReadoutModel fit_ridge(const Matrix& X, const std::vector<int>& labels, double lambda) {
  if (X.empty() || X.size() != labels.size()) {
    throw ShapeMismatch("ridge needs one label per non-empty feature row");
  }
  if (lambda < 0.0 || !std::isfinite(lambda)) {
    throw InvalidParams("ridge lambda must be non-negative");
  }
  const auto n = static_cast<Eigen::Index>(X.size());
  const auto d = static_cast<Eigen::Index>(X.front().size());
  Eigen::MatrixXd A(n, d);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(X[i].size()) != d) {
      throw ShapeMismatch("ridge rows differ in width");
    }
    for (Eigen::Index j = 0; j < d; ++j) A(i, j) = X[i][j];
    y(i) = labels[i] != 0 ? 1.0 : -1.0;
  }
  const Eigen::RowVectorXd x_mean = A.colwise().mean();
  const double y_mean = y.mean();
  A.rowwise() -= x_mean;
  y.array() -= y_mean;

  Eigen::MatrixXd gram = A.transpose() * A;
  gram.diagonal().array() += lambda;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const auto diag = ldlt.vectorD().cwiseAbs();
  if (ldlt.info() != Eigen::Success ||
      diag.minCoeff() <= 1e-12 * std::max(1.0, diag.maxCoeff())) {
    throw SingularSystem("ridge normal equations are singular");
  }
  const Eigen::VectorXd w = ldlt.solve(A.transpose() * y);

  ReadoutModel model;
  model.lambda = lambda;
  model.weights.assign(w.data(), w.data() + w.size());
  model.bias = y_mean - x_mean.dot(w);
  return model;
}

// ---------------------------------------------------------------------------
// Datasets

DatasetSplit parse_dataset_tsv(std::istream& in, std::string name) {
  DatasetSplit split;
  split.name = std::move(name);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(lineno, "expected label<TAB>text");
    }
    const std::string label = line.substr(0, tab);
    if (label != "0" && label != "1") {
      throw ParseError(lineno, "label must be 0 or 1");
    }
    split.rows.push_back({label == "1" ? 1 : 0, line.substr(tab + 1)});
  }
  return split;
}

DatasetSplit load_dataset_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw MissingInput("cannot open dataset '" + path + "'");
  }
  const auto slash = path.find_last_of('/');
  return parse_dataset_tsv(in, slash == std::string::npos ? path : path.substr(slash + 1));
}

SyntheticDataset synthetic_dataset(std::uint64_t seed, std::size_t n_train, std::size_t n_valid) {
  constexpr int kSentiment = 12;
  constexpr int kNeutral = 24;
  SyntheticDataset ds;
  for (int i = 0; i < kSentiment; ++i) {
    ds.vocabulary.push_back("good" + std::to_string(i));
    ds.vocabulary.push_back("bad" + std::to_string(i));
  }
  for (int i = 0; i < kNeutral; ++i) ds.vocabulary.push_back("neutral" + std::to_string(i));

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> length(6, 14);
  std::uniform_int_distribution<int> sentiment_word(0, kSentiment - 1);
  std::uniform_int_distribution<int> neutral_word(0, kNeutral - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const auto make = [&](std::size_t count, std::string name) {
    DatasetSplit split;
    split.name = std::move(name);
    for (std::size_t i = 0; i < count; ++i) {
      const int label = static_cast<int>(i % 2 == 0) ^ static_cast<int>(unit(rng) < 0.5);
      const std::string own = label ? "good" : "bad";
      const std::string other = label ? "bad" : "good";
      std::string text;
      const int len = length(rng);
      for (int t = 0; t < len; ++t) {
        const double u = unit(rng);
        std::string word;
        if (u < 0.5) {
          word = own + std::to_string(sentiment_word(rng));
        } else if (u < 0.6) {
          word = other + std::to_string(sentiment_word(rng));
        } else {
          word = "neutral" + std::to_string(neutral_word(rng));
        }
        if (t == 0) word[0] = static_cast<char>(std::toupper(word[0]));
        text += (t == 0 ? "" : (unit(rng) < 0.15 ? ", " : " ")) + word;
      }
      text += unit(rng) < 0.5 ? "!" : ".";
      split.rows.push_back({label, std::move(text)});
    }
    return split;
  };
  ds.train = make(n_train, "synthetic-train");
  ds.valid = make(n_valid, "synthetic-valid");
  return ds;
}

// ---------------------------------------------------------------------------
// Plaintext reference of the server circuits

namespace {

std::vector<double> hssm_track(const Matrix& xs, const GateWritePoly& poly, double a) {
  const std::size_t T = xs.size();
  std::vector<double> h(xs.front().size(), 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const double coef = std::pow(a, static_cast<double>(T - 1 - t));
    for (std::size_t i = 0; i < h.size(); ++i) {
      h[i] += coef * poly.gate(xs[t][i]) * poly.write(xs[t][i]);
    }
  }
  return h;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Unnormalized denominator sum_t kappa(z_t) for query i.
double kernel_denominator(const Matrix& xs, std::size_t i, double score_scale) {
  double d = 0.0;
  for (const auto& k : xs) {
    const double z = score_scale * dot(xs[i], k);
    d += 1.0 + z + 0.5 * z * z;
  }
  return d;
}

std::vector<double> attention_output(const Matrix& xs, const AttnParams& p, AttentionMode mode) {
  const std::size_t T = xs.size();
  const std::size_t n = xs.front().size();
  const double scale = p.effective_score_scale(n);
  const std::size_t first = mode == AttentionMode::FinalToken ? T - 1 : 0;
  std::vector<double> pooled(n, 0.0);
  for (std::size_t i = first; i < T; ++i) {
    std::vector<double> weights(T);
    double denom = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double z = scale * dot(xs[i], xs[t]);
      weights[t] = (1.0 + z + 0.5 * z * z) / p.denom_center;
      denom += weights[t];
    }
    const double r = denom - 1.0;
    const double rho = 1.0 - r + r * r;
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t j = 0; j < n; ++j) pooled[j] += rho * weights[t] * xs[t][j];
    }
  }
  const std::size_t queries = T - first;
  if (queries > 1) {
    for (double& v : pooled) v /= static_cast<double>(queries);
  }
  return pooled;
}

AttentionMode attention_mode(CircuitKind kind) {
  return kind == CircuitKind::AttnFinalToken ? AttentionMode::FinalToken
                                             : AttentionMode::FullSequence;
}

void require_pipeline_kind(CircuitKind kind) {
  if (kind != CircuitKind::HssmClosed && kind != CircuitKind::HssmMulti && !is_attention(kind)) {
    throw InvalidParams("pipeline supports hssm, hssm-multi, final-token and full-seq");
  }
}

}  // namespace

std::vector<double> plaintext_features(const Matrix& chunks, const TrainedPipeline& model) {
  switch (model.config.kind) {
    case CircuitKind::HssmClosed:
      return hssm_track(chunks, model.hssm.poly, model.hssm.decays.front());
    case CircuitKind::HssmMulti: {
      std::vector<double> all;
      for (double a : model.hssm.decays) {
        const auto h = hssm_track(chunks, model.hssm.poly, a);
        all.insert(all.end(), h.begin(), h.end());
      }
      return all;
    }
    default:
      return attention_output(chunks, model.attn, attention_mode(model.config.kind));
  }
}

double plaintext_score(const Matrix& chunks, const TrainedPipeline& model) {
  return model.readout.score(plaintext_features(chunks, model));
}

// ---------------------------------------------------------------------------
// Training

Matrix client_features(std::string_view text, const VectorTable& table,
                       const TrainedPipeline& model) {
  return project_clip(featurize(text, table, model.config.chunks), model.spec);
}

TrainedPipeline train_pipeline(const DatasetSplit& train, const VectorTable& table,
                               const PipelineConfig& config) {
  require_pipeline_kind(config.kind);
  if (train.rows.empty()) {
    throw DegenerateTraining("empty training split");
  }
  if (config.width != config.profile.slot_count) {
    throw ShapeMismatch("projection width must equal the profile slot count");
  }
  TrainedPipeline model;
  model.config = config;

  std::vector<Matrix> raw;
  std::vector<int> labels;
  for (const auto& row : train.rows) {
    raw.push_back(featurize(row.text, table, config.chunks));
    labels.push_back(row.label);
  }
  model.spec = fit_projection(raw, config.seed, config.width, config.feature_clip);

  std::vector<Matrix> chunks;
  chunks.reserve(raw.size());
  for (const auto& r : raw) chunks.push_back(project_clip(r, model.spec));

  model.hssm.decays = config.kind == CircuitKind::HssmMulti ? config.decays
                                                             : std::vector<double>{config.decay};
  model.attn.score_scale = 1.0 / static_cast<double>(config.width);
  if (is_attention(config.kind)) {
    // Center the reciprocal expansion on the mean training denominator.
    const auto mode = attention_mode(config.kind);
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& x : chunks) {
      const std::size_t first = mode == AttentionMode::FinalToken ? x.size() - 1 : 0;
      for (std::size_t i = first; i < x.size(); ++i) {
        total += kernel_denominator(x, i, *model.attn.score_scale);
        ++count;
      }
    }
    model.attn.denom_center = total / static_cast<double>(count);
  }

  Matrix features;
  features.reserve(chunks.size());
  double feature_max = 0.0;
  for (const auto& x : chunks) {
    features.push_back(plaintext_features(x, model));
    for (double v : features.back()) feature_max = std::max(feature_max, std::abs(v));
  }
  ReadoutModel ridge = fit_ridge(features, labels, config.lambda);

  // Shrink the readout so every partial sum of the encrypted dot product stays
  // well inside the clip bound; a positive factor leaves every decision intact.
  double l1 = 0.0;
  for (double w : ridge.weights) l1 += std::abs(w);
  const double bound = l1 * 2.0 * feature_max + std::abs(ridge.bias);
  const double gamma = bound > 0.0 ? std::min(1.0, 0.5 * config.profile.clip_bound / bound) : 1.0;
  for (double& w : ridge.weights) w *= gamma;
  ridge.bias *= gamma;
  model.readout = ridge;

  const std::size_t n = config.width;
  if (config.kind == CircuitKind::HssmMulti) {
    model.hssm.readout = RowReadout{std::vector<double>(n, 0.0), ridge.bias};
    for (std::size_t k = 0; k < model.hssm.decays.size(); ++k) {
      model.hssm.bank_readout.emplace_back(ridge.weights.begin() + static_cast<long>(k * n),
                                           ridge.weights.begin() + static_cast<long>((k + 1) * n));
    }
  } else if (is_attention(config.kind)) {
    model.attn.readout = RowReadout{ridge.weights, ridge.bias};
  } else {
    model.hssm.readout = RowReadout{ridge.weights, ridge.bias};
  }
  return model;
}

// ---------------------------------------------------------------------------
// Encrypted path

InferenceResult run_encrypted_inference(Context& ctx, const Matrix& chunks,
                                        const TrainedPipeline& model) {
  require_pipeline_kind(model.config.kind);
  const CircuitKind kind = model.config.kind;

  std::vector<CtVector> xs;
  xs.reserve(chunks.size());
  for (const auto& c : chunks) xs.push_back(ctx.encrypt(c));

  InferenceResult result;
  RunReport& rep = result.report;
  rep.model_kind = kind_name(kind);
  rep.T = static_cast<int>(chunks.size());
  rep.depth = ctx.params().depth_budget;
  rep.seed = model.config.seed;

  const OpLedger before = ctx.ledger();
  try {
    CircuitResult out;
    if (model.config.client_side_readout) {
      result.needs_client_readout = true;
      if (kind == CircuitKind::HssmClosed) {
        out = hssm_closed_form_state(ctx, xs, model.hssm, false);
      } else if (is_attention(kind)) {
        out = poly_attention(ctx, xs, xs, xs, model.attn, attention_mode(kind));
      } else {
        throw InvalidParams("client-side readout supports single-track models only");
      }
    } else if (kind == CircuitKind::HssmClosed) {
      out = hssm_closed_form(ctx, xs, model.hssm, false);
    } else if (kind == CircuitKind::HssmMulti) {
      out = hssm_multi_decay(ctx, xs, model.hssm, false);
    } else {
      out = attention_block(ctx, xs, model.attn, attention_mode(kind), false);
    }
    result.score = out.output;
    result.trace = std::move(out.trace);
    rep.final_level = result.score.level();
    rep.final_degree = result.score.degree();
  } catch (const LevelExhausted& e) {
    rep.status = RunStatus::LevelExhausted;
    rep.status_detail = e.step();
    rep.final_degree = 2;
    result.trace = e.partial_trace();
  }
  result.server_ledger = ledger_delta(ctx.ledger(), before);
  if (result.server_ledger.encrypt_count != 0 || result.server_ledger.decrypt_count != 0) {
    throw std::logic_error("server segment performed client-side operations");
  }
  for (const auto& x : xs) ctx.release(x);

  rep.ledger = ctx.ledger();
  const auto T = static_cast<std::uint64_t>(chunks.size());
  rep.footprint = footprint(T);
  rep.logical_state_units = logical_state_units(kind, T, model.hssm.decays.size());
  rep.sim_cost = sim_cost(result.server_ledger);
  return result;
}

int decrypt_threshold(Context& ctx, const CtVector& score, double threshold) {
  const Decrypted d = ctx.decrypt(score);
  return d.values.at(0) >= threshold ? 1 : 0;
}

double client_score(Context& ctx, const InferenceResult& inference, const TrainedPipeline& model) {
  const Decrypted d = ctx.decrypt(inference.score);
  if (!inference.needs_client_readout) {
    return d.values.at(0);
  }
  return model.readout.score(d.values);
}

MatchReport verify_exact_match(const DatasetSplit& dataset, const VectorTable& table,
                               const TrainedPipeline& model) {
  MatchReport rep;
  rep.dataset = dataset.name;
  rep.model = kind_name(model.config.kind);
  rep.n = dataset.rows.size();
  rep.min_plain_margin = std::numeric_limits<double>::infinity();

  std::size_t matches = 0;
  std::size_t plain_correct = 0;
  std::size_t enc_correct = 0;
  for (std::size_t i = 0; i < dataset.rows.size(); ++i) {
    const auto& row = dataset.rows[i];
    const Matrix x = client_features(row.text, table, model);
    ExampleOutcome ex;
    ex.index = i;
    ex.label = row.label;
    ex.plain_score = plaintext_score(x, model);
    ex.plain_decision = ex.plain_score >= 0.0 ? 1 : 0;

    Context ctx(model.config.profile);
    const InferenceResult inf = run_encrypted_inference(ctx, x, model);
    const std::uint64_t peak = std::max(rep.ledger.peak_live_ciphertexts,
                                        ctx.ledger().peak_live_ciphertexts);
    rep.ledger += ctx.ledger();
    // Examples run one after another, so the overall peak is the largest one.
    rep.ledger.peak_live_ciphertexts = peak;
    if (inf.report.status == RunStatus::Ok) {
      ex.encrypted_score = client_score(ctx, inf, model);
      ex.encrypted_decision = ex.encrypted_score >= 0.0 ? 1 : 0;
      rep.ledger.decrypt_count += 1;
      rep.final_level = inf.report.final_level;
      rep.final_degree = inf.report.final_degree;
      rep.max_score_delta =
          std::max(rep.max_score_delta, std::abs(ex.encrypted_score - ex.plain_score));
    } else {
      ++rep.exhausted;
      ex.encrypted_score = std::numeric_limits<double>::quiet_NaN();
      ex.encrypted_decision = -1;
    }
    rep.min_plain_margin = std::min(rep.min_plain_margin, std::abs(ex.plain_score));
    matches += ex.plain_decision == ex.encrypted_decision ? 1 : 0;
    plain_correct += ex.plain_decision == row.label ? 1 : 0;
    enc_correct += ex.encrypted_decision == row.label ? 1 : 0;
    rep.examples.push_back(ex);
  }
  if (rep.n > 0) {
    const double n = static_cast<double>(rep.n);
    rep.match_fraction = static_cast<double>(matches) / n;
    rep.plain_accuracy = static_cast<double>(plain_correct) / n;
    rep.encrypted_accuracy = static_cast<double>(enc_correct) / n;
  } else {
    rep.min_plain_margin = 0.0;
  }
  return rep;
}

std::string match_report_json(const MatchReport& r, int indent) {
  const OpLedger& l = r.ledger;
  const std::uint64_t server_ops =
      l.mul_ct_ct + l.mul_ct_pt + l.add + l.rescale + l.level_switch + l.rotate;
  const std::uint64_t client_ops = l.encrypt_count + l.decrypt_count;
  nlohmann::ordered_json j;
  j["dataset"] = r.dataset;
  j["model"] = r.model;
  j["n"] = r.n;
  j["match_fraction"] = r.match_fraction;
  j["max_score_delta"] = r.max_score_delta;
  j["ledger"] = {
      {"mul_ct_ct", l.mul_ct_ct},
      {"mul_ct_pt", l.mul_ct_pt},
      {"add", l.add},
      {"rescale", l.rescale},
      {"level_switch", l.level_switch},
      {"rotate", l.rotate},
      {"encrypt_count", l.encrypt_count},
      {"decrypt_count", l.decrypt_count},
      {"clip_events", l.clip_events},
      {"peak_live_ciphertexts", l.peak_live_ciphertexts},
  };
  j["final_level"] = r.final_level;
  j["final_degree"] = r.final_degree;
  j["min_plain_margin"] = r.min_plain_margin;
  j["plain_accuracy"] = r.plain_accuracy;
  j["encrypted_accuracy"] = r.encrypted_accuracy;
  j["exhausted"] = r.exhausted;
  j["server_op_share"] =
      server_ops + client_ops == 0
          ? 0.0
          : static_cast<double>(server_ops) / static_cast<double>(server_ops + client_ops);
  return j.dump(indent);
}

void write_match_examples_csv(std::ostream& out, const MatchReport& r) {
  out << "index,label,plain_score,encrypted_score,plain_decision,encrypted_decision\n";
  for (const auto& e : r.examples) {
    out << e.index << ',' << e.label << ',' << format_double(e.plain_score) << ','
        << format_double(e.encrypted_score) << ',' << e.plain_decision << ','
        << e.encrypted_decision << '\n';
  }
}

}  // namespace hssmlab
