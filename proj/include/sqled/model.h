#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sqled/graph.h"

namespace sqled {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ModelConfig {
  int hidden_dim = 256;
  int attention_heads = 4;
  int gat_layers = 3;
  double leaky_relu_slope = 0.2;
  double dropout_rate = 0.1;
  double init_scale = 0.02;  // std of embedding rows
  int ffn_hidden = 0;  // width of the FFN hidden layer, 0 means hidden_dim
  int token_vocab = 1;
  int label_vocab = 1;
  int edge_types = kNumEdgeTypes;
  int external_dim = 0;  // width of external leaf vectors, 0 when unused
  bool layer_ablation = false;  // permits gat_layers != 3
  bool share_encoders = false;
  std::uint64_t seed = 0;

  // Throws ConfigError.
  void validate() const;
  int head_dim() const { return hidden_dim / attention_heads; }
  int ffn_width() const { return ffn_hidden > 0 ? ffn_hidden : hidden_dim; }
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Word-level vocabulary, lower-cased, id 0 reserved for unknown entries.
class Vocabulary {
 public:
  Vocabulary();
  static Vocabulary build(const std::map<std::string, int>& counts, int min_count = 1);

  int id(const std::string& word) const;
  int size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }
  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

 private:
  std::vector<std::string> words_;
  std::map<std::string, int> index_;
};

std::string lower(const std::string& s);

struct GatLayerParams {
  Mat w_source;   // d x d
  Mat w_target;   // d x d
  Mat attention;  // heads x head_dim
  Mat edge_bias;  // heads x edge_types
};

struct Parameters {
  ModelConfig config;
  Mat token_embedding;  // token_vocab x d
  Mat label_embedding;  // label_vocab x d
  Mat projection;       // external_dim x d, empty unless external_dim > 0
  std::array<std::vector<GatLayerParams>, 2> encoders;  // question, SQL
  Mat ffn_w1;  // f x 2d
  Mat ffn_b1;  // f x 1
  Mat ffn_w2;  // f x 1, zero at initialization
  Mat ffn_b2;  // 1 x 1

  // Every tensor under a stable name, in a fixed order.
  std::vector<std::pair<std::string, Mat*>> tensors();
  std::vector<std::pair<std::string, const Mat*>> tensors() const;
  std::size_t count() const;
  bool all_finite() const;
  // FNV-1a over the raw bytes of every tensor.
  std::uint64_t checksum() const;
};

// Seeded initialization. Edge biases and the FFN output layer start at zero.
Parameters init_parameters(const ModelConfig& config);
// Same shapes, all zero.
Parameters zeros_like(const Parameters& p);

// Encoder input for one graph. Leaves carry token ids, internal nodes label
// ids. External rows, when present, are indexed by token position.
struct GraphInput {
  MessageGraph graph;
  std::vector<int> token_ids;  // per node, -1 for internal nodes
  std::vector<int> label_ids;  // per node, -1 for leaves
  std::vector<int> token_positions;  // per node, -1 for internal nodes
  std::optional<Mat> external;
};

struct PairInput {
  GraphInput question;
  GraphInput sql;
};

// Unknown tokens and labels map to row 0. Throws EmptyGraph.
GraphInput make_graph_input(const Graph& g, const std::vector<std::string>& tokens,
                            const Vocabulary& token_vocab, const Vocabulary& label_vocab,
                            bool add_reverse = true);

// n x hidden_dim initial features. Throws DimensionError when external rows do
// not match the configured width.
Mat embed_nodes(const GraphInput& in, const Parameters& p);

// Intermediate values of one layer, kept for the backward pass.
struct GatCache {
  Mat input, zs, zt;
  Mat pre_act;   // E x d, zs[dst] + zt[src]
  Mat alpha;     // E x heads
  Mat output;    // n x d
};

Mat gat_layer(const MessageGraph& g, const Mat& h, const GatLayerParams& lp, const ModelConfig& config,
              GatCache* cache = nullptr);

struct EncoderCache {
  Mat embedded;
  std::vector<GatCache> layers;
  Mat final_states;
};

struct ForwardCache {
  std::array<EncoderCache, 2> encoders;
  Eigen::VectorXd global;   // after dropout
  Eigen::VectorXd dropout_mask;  // empty when dropout is off
  Eigen::VectorXd hidden;   // tanh(W1 h + b1)
  double logit = 0.0;
  double score = 0.5;
};

// [mean of question node states; mean of SQL node states].
Eigen::VectorXd encode_pair(const PairInput& in, const Parameters& p, ForwardCache* cache = nullptr);

double score(const Eigen::VectorXd& global, const Parameters& p);

// Full forward pass. A non-empty mask multiplies h_global elementwise.
double forward(const PairInput& in, const Parameters& p, ForwardCache* cache = nullptr,
               const Eigen::VectorXd* dropout_mask = nullptr);

// Accumulates d(loss)/d(params) into grad, given d(loss)/d(logit).
void backward(const PairInput& in, const Parameters& p, const ForwardCache& cache, double dlogit,
              Parameters& grad);

// Mean binary cross-entropy with scores clamped into [1e-12, 1 - 1e-12].
double bce_loss(const std::vector<double>& scores, const std::vector<int>& labels);
// d(loss)/d(score) per example, zero where the clamp is active.
std::vector<double> bce_loss_grad(const std::vector<double>& scores, const std::vector<int>& labels);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  std::size_t checked = 0;
  // Entries whose stencil crosses a LeakyReLU kink, where central
  // differences are not a valid reference.
  std::size_t skipped_kinks = 0;
};

// |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-6);

// (f(x + eps) - f(x - eps)) / 2 eps, evaluating the plus side first.
double central_difference(const std::function<double(double)>& f, double x, double eps);

// Central differences on the single-example loss against the analytic
// gradient. `corrupt` may tamper with the analytic gradient first.
GradCheckResult grad_check(const PairInput& in, int label, const Parameters& p, double eps = 1e-4,
                           const std::function<void(Parameters&)>& corrupt = {});

// Checkpoint: versioned binary container holding the config, vocabularies and
// named tensors.
struct Model {
  Parameters params;
  Vocabulary tokens;
  Vocabulary labels;
  bool simplify_graphs = true;
  bool prune_joins = true;
  bool add_reverse = true;
};

void save_model(const std::filesystem::path& path, const Model& m);
Model load_model(const std::filesystem::path& path);

// Embedding file: per key, subword rows (float32) plus a token -> subword span
// alignment. Token vectors average their subword rows.
struct EmbeddingEntry {
  Eigen::MatrixXf subwords;
  std::vector<std::pair<int, int>> spans;  // [begin, end) per token
};
using EmbeddingTable = std::map<std::string, EmbeddingEntry>;

void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);
EmbeddingTable read_embeddings(const std::filesystem::path& path);
Mat token_vectors(const EmbeddingEntry& e);

}  // namespace sqled
