#include "sqled/model.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <json.hpp>

#include "sqled/error.h"

namespace sqled {

void ModelConfig::validate() const {
  if (hidden_dim <= 0 || attention_heads <= 0) throw ConfigError("hidden_dim and attention_heads must be positive");
  if (hidden_dim % attention_heads != 0) throw ConfigError("hidden_dim must be divisible by attention_heads");
  if (gat_layers != 3 && !layer_ablation) throw ConfigError("gat_layers must be 3 unless layer ablation is enabled");
  if (gat_layers < 0) throw ConfigError("gat_layers must be non-negative");
  if (dropout_rate < 0 || dropout_rate >= 1) throw ConfigError("dropout_rate must be in [0, 1)");
  if (token_vocab < 1 || label_vocab < 1) throw ConfigError("vocabularies need the unknown row");
  if (edge_types != kNumEdgeTypes) throw ConfigError("edge_types must match the graph edge types");
  if (external_dim < 0) throw ConfigError("external_dim must be non-negative");
  if (ffn_hidden < 0) throw ConfigError("ffn_hidden must be non-negative");
  if (!(init_scale > 0)) throw ConfigError("init_scale must be positive");
}

std::string lower(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

Vocabulary::Vocabulary() : words_{"<unk>"} {}

Vocabulary Vocabulary::build(const std::map<std::string, int>& counts, int min_count) {
  std::map<std::string, int> merged;
  for (const auto& [w, c] : counts) merged[lower(w)] += c;
  Vocabulary v;
  for (const auto& [w, c] : merged) {
    if (c < min_count || w == "<unk>") continue;
    v.index_[w] = static_cast<int>(v.words_.size());
    v.words_.push_back(w);
  }
  return v;
}

int Vocabulary::id(const std::string& word) const {
  const auto it = index_.find(lower(word));
  return it == index_.end() ? 0 : it->second;
}

namespace {

std::vector<std::pair<std::string, Mat*>> collect(Parameters& p) {
  std::vector<std::pair<std::string, Mat*>> out = {{"token_embedding", &p.token_embedding},
                                                   {"label_embedding", &p.label_embedding}};
  if (p.projection.size() > 0) out.emplace_back("projection", &p.projection);
  for (int e = 0; e < 2; ++e) {
    for (std::size_t l = 0; l < p.encoders[e].size(); ++l) {
      const std::string prefix = "encoder" + std::to_string(e) + ".layer" + std::to_string(l) + ".";
      auto& lp = p.encoders[e][l];
      out.emplace_back(prefix + "w_source", &lp.w_source);
      out.emplace_back(prefix + "w_target", &lp.w_target);
      out.emplace_back(prefix + "attention", &lp.attention);
      out.emplace_back(prefix + "edge_bias", &lp.edge_bias);
    }
  }
  out.emplace_back("ffn.w1", &p.ffn_w1);
  out.emplace_back("ffn.b1", &p.ffn_b1);
  out.emplace_back("ffn.w2", &p.ffn_w2);
  out.emplace_back("ffn.b2", &p.ffn_b2);
  return out;
}

}  // namespace

std::vector<std::pair<std::string, Mat*>> Parameters::tensors() { return collect(*this); }

std::vector<std::pair<std::string, const Mat*>> Parameters::tensors() const {
  std::vector<std::pair<std::string, const Mat*>> out;
  for (auto& [name, m] : collect(const_cast<Parameters&>(*this))) out.emplace_back(name, m);
  return out;
}

std::size_t Parameters::count() const {
  std::size_t n = 0;
  for (const auto& [name, m] : tensors()) n += static_cast<std::size_t>(m->size());
  return n;
}

bool Parameters::all_finite() const {
  for (const auto& [name, m] : tensors()) {
    if (!m->allFinite()) return false;
  }
  return true;
}

std::uint64_t Parameters::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& [name, m] : tensors()) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(m->data());
    for (std::size_t i = 0; i < static_cast<std::size_t>(m->size()) * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  }
  return h;
}

namespace {

Mat normal(std::mt19937_64& rng, int rows, int cols, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

}  // namespace

Parameters init_parameters(const ModelConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  const int d = config.hidden_dim, heads = config.attention_heads;
  Parameters p;
  p.config = config;
  p.token_embedding = normal(rng, config.token_vocab, d, config.init_scale);
  p.label_embedding = normal(rng, config.label_vocab, d, config.init_scale);
  if (config.external_dim > 0) {
    p.projection = normal(rng, config.external_dim, d, 1.0 / std::sqrt(config.external_dim));
  }
  const int encoders = config.share_encoders ? 1 : 2;
  for (int e = 0; e < encoders; ++e) {
    for (int l = 0; l < config.gat_layers; ++l) {
      GatLayerParams lp;
      lp.w_source = normal(rng, d, d, 1.0 / std::sqrt(d));
      lp.w_target = normal(rng, d, d, 1.0 / std::sqrt(d));
      lp.attention = normal(rng, heads, config.head_dim(), 1.0 / std::sqrt(config.head_dim()));
      lp.edge_bias = Mat::Zero(heads, config.edge_types);
      p.encoders[e].push_back(lp);
    }
  }
  const int f = config.ffn_width();
  p.ffn_w1 = normal(rng, f, 2 * d, 1.0 / std::sqrt(2 * d));
  p.ffn_b1 = Mat::Zero(f, 1);
  p.ffn_w2 = Mat::Zero(f, 1);
  p.ffn_b2 = Mat::Zero(1, 1);
  return p;
}

Parameters zeros_like(const Parameters& p) {
  Parameters z = p;
  for (auto& [name, m] : z.tensors()) m->setZero();
  return z;
}

GraphInput make_graph_input(const Graph& g, const std::vector<std::string>& tokens,
                            const Vocabulary& token_vocab, const Vocabulary& label_vocab,
                            bool add_reverse) {
  if (g.empty()) throw EmptyGraph();
  GraphInput in;
  in.graph = symmetrize_with_self_loops(g, add_reverse);
  for (const auto& n : g.nodes()) {
    if (n.is_leaf()) {
      if (n.token_position < 0 || n.token_position >= static_cast<int>(tokens.size())) {
        throw GraphError("leaf token position " + std::to_string(n.token_position) + " out of range");
      }
      in.token_ids.push_back(token_vocab.id(tokens[static_cast<std::size_t>(n.token_position)]));
      in.label_ids.push_back(-1);
      in.token_positions.push_back(n.token_position);
    } else {
      in.token_ids.push_back(-1);
      in.label_ids.push_back(label_vocab.id(n.label));
      in.token_positions.push_back(-1);
    }
  }
  return in;
}

Mat embed_nodes(const GraphInput& in, const Parameters& p) {
  const int d = p.config.hidden_dim;
  const int n = static_cast<int>(in.token_ids.size());
  if (n == 0) throw EmptyGraph();
  const bool project = p.projection.size() > 0;
  if (in.external) {
    const auto width = in.external->cols();
    if (project ? width != p.projection.rows() : width != d) {
      throw DimensionError("external vectors have width " + std::to_string(width) + ", expected " +
                           std::to_string(project ? p.projection.rows() : d));
    }
  }
  Mat h(n, d);
  for (int i = 0; i < n; ++i) {
    if (in.token_ids[i] >= 0) {
      if (in.external) {
        const auto& ext = *in.external;
        const int pos = in.token_positions[i];
        if (pos >= ext.rows()) throw DimensionError("external vectors missing token " + std::to_string(pos));
        h.row(i) = project ? Mat(ext.row(pos) * p.projection) : Mat(ext.row(pos));
      } else {
        if (in.token_ids[i] >= p.token_embedding.rows()) throw DimensionError("token id outside the embedding table");
        h.row(i) = p.token_embedding.row(in.token_ids[i]);
      }
    } else {
      if (in.label_ids[i] >= p.label_embedding.rows()) throw DimensionError("label id outside the embedding table");
      h.row(i) = p.label_embedding.row(in.label_ids[i]);
    }
  }
  return h;
}

namespace {

int edge_count(const MessageGraph& g) { return static_cast<int>(g.edges.size()); }

double sorted_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0;
  for (double t : terms) s += t;
  return s;
}

}  // namespace

Mat gat_layer(const MessageGraph& g, const Mat& h, const GatLayerParams& lp, const ModelConfig& config,
              GatCache* cache) {
  const int n = static_cast<int>(h.rows());
  const int heads = config.attention_heads, hd = config.head_dim();
  const double slope = config.leaky_relu_slope;
  const int edges = edge_count(g);

  Mat zs = h * lp.w_source;
  Mat zt = h * lp.w_target;
  Mat pre(edges, h.cols());
  Mat logits(edges, heads);
  for (int e = 0; e < edges; ++e) {
    const Edge& edge = g.edges[e];
    pre.row(e) = zs.row(edge.dst) + zt.row(edge.src);
    for (int k = 0; k < heads; ++k) {
      double s = lp.edge_bias(k, static_cast<int>(edge.type));
      for (int c = 0; c < hd; ++c) {
        const double u = pre(e, k * hd + c);
        s += lp.attention(k, c) * (u > 0 ? u : slope * u);
      }
      logits(e, k) = s;
    }
  }

  // Softmax over each node's incoming edges; edges are grouped by dst.
  // Sums run over sorted terms so that node numbering cannot change a bit.
  Mat alpha(edges, heads);
  Mat out = Mat::Zero(n, h.cols());
  std::vector<double> terms;
  for (int begin = 0; begin < edges;) {
    int end = begin;
    const int dst = g.edges[begin].dst;
    while (end < edges && g.edges[end].dst == dst) ++end;
    for (int k = 0; k < heads; ++k) {
      double top = logits(begin, k);
      for (int e = begin + 1; e < end; ++e) top = std::max(top, logits(e, k));
      terms.clear();
      for (int e = begin; e < end; ++e) {
        alpha(e, k) = std::exp(logits(e, k) - top);
        terms.push_back(alpha(e, k));
      }
      const double z = sorted_sum(terms);
      for (int e = begin; e < end; ++e) alpha(e, k) /= z;
      for (int c = 0; c < hd; ++c) {
        terms.clear();
        for (int e = begin; e < end; ++e) terms.push_back(alpha(e, k) * zt(g.edges[e].src, k * hd + c));
        out(dst, k * hd + c) = sorted_sum(terms);
      }
    }
    begin = end;
  }

  Mat result = (h + out).array().tanh().matrix();
  if (!result.allFinite()) throw NumericalError("non-finite value in attention layer");
  if (cache) {
    cache->input = h;
    cache->zs = std::move(zs);
    cache->zt = std::move(zt);
    cache->pre_act = std::move(pre);
    cache->alpha = std::move(alpha);
    cache->output = result;
  }
  return result;
}

namespace {

// Returns d(loss)/d(layer input); accumulates parameter gradients.
Mat gat_layer_backward(const MessageGraph& g, const GatLayerParams& lp, const ModelConfig& config,
                       const GatCache& c, const Mat& d_out, GatLayerParams& grad) {
  const int heads = config.attention_heads, hd = config.head_dim();
  const double slope = config.leaky_relu_slope;
  const int edges = edge_count(g);

  const Mat d_pre_tanh = (d_out.array() * (1.0 - c.output.array().square())).matrix();
  Mat d_in = d_pre_tanh;  // residual branch
  const Mat& d_msg = d_pre_tanh;

  Mat d_zs = Mat::Zero(c.zs.rows(), c.zs.cols());
  Mat d_zt = Mat::Zero(c.zt.rows(), c.zt.cols());
  Mat d_alpha(edges, heads);
  for (int e = 0; e < edges; ++e) {
    const Edge& edge = g.edges[e];
    for (int k = 0; k < heads; ++k) {
      const auto msg = d_msg.block(edge.dst, k * hd, 1, hd);
      d_alpha(e, k) = msg.cwiseProduct(c.zt.block(edge.src, k * hd, 1, hd)).sum();
      d_zt.block(edge.src, k * hd, 1, hd) += c.alpha(e, k) * msg;
    }
  }

  Mat d_logit(edges, heads);
  for (int begin = 0; begin < edges;) {
    int end = begin;
    while (end < edges && g.edges[end].dst == g.edges[begin].dst) ++end;
    for (int k = 0; k < heads; ++k) {
      double dot = 0;
      for (int e = begin; e < end; ++e) dot += c.alpha(e, k) * d_alpha(e, k);
      for (int e = begin; e < end; ++e) d_logit(e, k) = c.alpha(e, k) * (d_alpha(e, k) - dot);
    }
    begin = end;
  }

  for (int e = 0; e < edges; ++e) {
    const Edge& edge = g.edges[e];
    for (int k = 0; k < heads; ++k) {
      const double dl = d_logit(e, k);
      grad.edge_bias(k, static_cast<int>(edge.type)) += dl;
      for (int ch = 0; ch < hd; ++ch) {
        const int col = k * hd + ch;
        const double u = c.pre_act(e, col);
        grad.attention(k, ch) += dl * (u > 0 ? u : slope * u);
        const double du = dl * lp.attention(k, ch) * (u > 0 ? 1.0 : slope);
        d_zs(edge.dst, col) += du;
        d_zt(edge.src, col) += du;
      }
    }
  }

  grad.w_source.noalias() += c.input.transpose() * d_zs;
  grad.w_target.noalias() += c.input.transpose() * d_zt;
  d_in.noalias() += d_zs * lp.w_source.transpose();
  d_in.noalias() += d_zt * lp.w_target.transpose();
  return d_in;
}

const std::vector<GatLayerParams>& encoder_params(const Parameters& p, int slot) {
  return p.encoders[p.config.share_encoders ? 0 : slot];
}

std::vector<GatLayerParams>& encoder_params(Parameters& p, int slot) {
  return p.encoders[p.config.share_encoders ? 0 : slot];
}

Eigen::VectorXd run_encoder(const GraphInput& in, const Parameters& p, int slot, EncoderCache* cache) {
  Mat h = embed_nodes(in, p);
  if (cache) {
    cache->embedded = h;
    cache->layers.assign(encoder_params(p, slot).size(), GatCache{});
  }
  const auto& layers = encoder_params(p, slot);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    h = gat_layer(in.graph, h, layers[l], p.config, cache ? &cache->layers[l] : nullptr);
  }
  Eigen::VectorXd pooled(h.cols());
  std::vector<double> column(static_cast<std::size_t>(h.rows()));
  for (Eigen::Index c = 0; c < h.cols(); ++c) {
    for (Eigen::Index i = 0; i < h.rows(); ++i) column[static_cast<std::size_t>(i)] = h(i, c);
    pooled(c) = sorted_sum(column) / static_cast<double>(h.rows());
  }
  if (cache) cache->final_states = std::move(h);
  return pooled;
}

void encoder_backward(const GraphInput& in, const Parameters& p, int slot, const EncoderCache& cache,
                      const Eigen::VectorXd& d_pooled, Parameters& grad) {
  const auto n = cache.final_states.rows();
  Mat d_h = (d_pooled.transpose() / static_cast<double>(n)).replicate(n, 1);
  const auto& layers = encoder_params(p, slot);
  auto& glayers = encoder_params(grad, slot);
  for (std::size_t l = layers.size(); l-- > 0;) {
    d_h = gat_layer_backward(in.graph, layers[l], p.config, cache.layers[l], d_h, glayers[l]);
  }
  const bool project = p.projection.size() > 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (in.token_ids[i] >= 0) {
      if (in.external) {
        if (project) grad.projection.noalias() += in.external->row(in.token_positions[i]).transpose() * d_h.row(i);
      } else {
        grad.token_embedding.row(in.token_ids[i]) += d_h.row(i);
      }
    } else {
      grad.label_embedding.row(in.label_ids[i]) += d_h.row(i);
    }
  }
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double z = std::exp(x);
  return z / (1.0 + z);
}

}  // namespace

Eigen::VectorXd encode_pair(const PairInput& in, const Parameters& p, ForwardCache* cache) {
  const int d = p.config.hidden_dim;
  Eigen::VectorXd global(2 * d);
  global.head(d) = run_encoder(in.question, p, 0, cache ? &cache->encoders[0] : nullptr);
  global.tail(d) = run_encoder(in.sql, p, 1, cache ? &cache->encoders[1] : nullptr);
  return global;
}

double score(const Eigen::VectorXd& global, const Parameters& p) {
  const Eigen::VectorXd hidden = (p.ffn_w1 * global + p.ffn_b1).array().tanh().matrix();
  return sigmoid(p.ffn_w2.col(0).dot(hidden) + p.ffn_b2(0, 0));
}

double forward(const PairInput& in, const Parameters& p, ForwardCache* cache,
               const Eigen::VectorXd* dropout_mask) {
  Eigen::VectorXd global = encode_pair(in, p, cache);
  if (dropout_mask && dropout_mask->size() > 0) global = global.cwiseProduct(*dropout_mask);
  const Eigen::VectorXd hidden = (p.ffn_w1 * global + p.ffn_b1).array().tanh().matrix();
  const double logit = p.ffn_w2.col(0).dot(hidden) + p.ffn_b2(0, 0);
  if (!std::isfinite(logit)) throw NumericalError("non-finite score");
  const double s = sigmoid(logit);
  if (cache) {
    cache->global = global;
    cache->dropout_mask = dropout_mask ? *dropout_mask : Eigen::VectorXd();
    cache->hidden = hidden;
    cache->logit = logit;
    cache->score = s;
  }
  return s;
}

void backward(const PairInput& in, const Parameters& p, const ForwardCache& cache, double dlogit,
              Parameters& grad) {
  const int d = p.config.hidden_dim;
  grad.ffn_w2.col(0) += dlogit * cache.hidden;
  grad.ffn_b2(0, 0) += dlogit;
  const Eigen::VectorXd dz =
      (dlogit * p.ffn_w2.col(0)).cwiseProduct((1.0 - cache.hidden.array().square()).matrix());
  grad.ffn_w1.noalias() += dz * cache.global.transpose();
  grad.ffn_b1.col(0) += dz;
  Eigen::VectorXd d_global = p.ffn_w1.transpose() * dz;
  if (cache.dropout_mask.size() > 0) d_global = d_global.cwiseProduct(cache.dropout_mask);
  encoder_backward(in.question, p, 0, cache.encoders[0], d_global.head(d), grad);
  encoder_backward(in.sql, p, 1, cache.encoders[1], d_global.tail(d), grad);
}

namespace {
constexpr double kClamp = 1e-12;
}

double bce_loss(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw LengthMismatch(scores.size(), labels.size());
  if (scores.empty()) return 0.0;
  double total = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = std::clamp(scores[i], kClamp, 1.0 - kClamp);
    total -= labels[i] == 1 ? std::log(s) : std::log(1.0 - s);
  }
  return total / static_cast<double>(scores.size());
}

std::vector<double> bce_loss_grad(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw LengthMismatch(scores.size(), labels.size());
  std::vector<double> g;
  const double n = static_cast<double>(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = scores[i];
    if (s < kClamp || s > 1.0 - kClamp) {
      g.push_back(0.0);
    } else {
      g.push_back((labels[i] == 1 ? -1.0 / s : 1.0 / (1.0 - s)) / n);
    }
  }
  return g;
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

double central_difference(const std::function<double(double)>& f, double x, double eps) {
  const double plus = f(x + eps);
  const double minus = f(x - eps);
  return (plus - minus) / (2 * eps);
}

namespace {

// Sign pattern of every LeakyReLU input in both encoders.
std::vector<bool> kink_signs(const ForwardCache& c) {
  std::vector<bool> out;
  for (const auto& enc : c.encoders) {
    for (const auto& layer : enc.layers) {
      for (Eigen::Index i = 0; i < layer.pre_act.size(); ++i) out.push_back(layer.pre_act.data()[i] > 0);
    }
  }
  return out;
}

}  // namespace

GradCheckResult grad_check(const PairInput& in, int label, const Parameters& p, double eps,
                           const std::function<void(Parameters&)>& corrupt) {
  ForwardCache cache;
  const double s = forward(in, p, &cache);
  const double dlds = bce_loss_grad({s}, {label})[0];
  Parameters analytic = zeros_like(p);
  backward(in, p, cache, dlds * s * (1.0 - s), analytic);
  if (corrupt) corrupt(analytic);

  GradCheckResult result;
  Parameters probe = p;
  auto probe_tensors = probe.tensors();
  const auto grad_tensors = analytic.tensors();
  for (std::size_t t = 0; t < probe_tensors.size(); ++t) {
    Mat& m = *probe_tensors[t].second;
    const Mat& g = *grad_tensors[t].second;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double saved = m.data()[i];
      std::vector<std::vector<bool>> signs;
      const double numeric = central_difference(
          [&](double x) {
            m.data()[i] = x;
            ForwardCache c;
            const double loss = bce_loss({forward(in, probe, &c)}, {label});
            signs.push_back(kink_signs(c));
            return loss;
          },
          saved, eps);
      m.data()[i] = saved;
      if (signs[0] != signs[1]) {
        ++result.skipped_kinks;
        continue;
      }
      const double err = relative_error(g.data()[i], numeric);
      ++result.checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_tensor = probe_tensors[t].first;
      }
    }
  }
  return result;
}

namespace {

constexpr char kModelMagic[8] = {'S', 'Q', 'L', 'E', 'D', 'M', 'D', 'L'};
constexpr char kEmbedMagic[8] = {'S', 'Q', 'L', 'E', 'D', 'E', 'M', 'B'};
constexpr std::uint32_t kFormatVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("truncated binary file");
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint32_t>(in);
  if (n > (1u << 30)) throw DataError("corrupt string length");
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw DataError("truncated binary file");
  return s;
}

void check_magic(std::istream& in, const char (&magic)[8], const std::string& what) {
  char buf[8];
  in.read(buf, 8);
  if (!in || std::memcmp(buf, magic, 8) != 0) throw DataError("not a " + what + " file");
  const auto version = get<std::uint32_t>(in);
  if (version != kFormatVersion) throw DataError("unsupported " + what + " version " + std::to_string(version));
}

nlohmann::json config_json(const ModelConfig& c) {
  return {{"hidden_dim", c.hidden_dim},         {"attention_heads", c.attention_heads},
          {"gat_layers", c.gat_layers},         {"leaky_relu_slope", c.leaky_relu_slope},
          {"dropout_rate", c.dropout_rate},     {"init_scale", c.init_scale},
          {"token_vocab", c.token_vocab},       {"label_vocab", c.label_vocab},
          {"edge_types", c.edge_types},         {"external_dim", c.external_dim},
          {"layer_ablation", c.layer_ablation}, {"share_encoders", c.share_encoders},
          {"ffn_hidden", c.ffn_hidden},         {"seed", c.seed}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.hidden_dim = j.at("hidden_dim");
  c.attention_heads = j.at("attention_heads");
  c.gat_layers = j.at("gat_layers");
  c.leaky_relu_slope = j.at("leaky_relu_slope");
  c.dropout_rate = j.at("dropout_rate");
  c.init_scale = j.at("init_scale");
  c.token_vocab = j.at("token_vocab");
  c.label_vocab = j.at("label_vocab");
  c.edge_types = j.at("edge_types");
  c.external_dim = j.at("external_dim");
  c.layer_ablation = j.at("layer_ablation");
  c.share_encoders = j.at("share_encoders");
  c.ffn_hidden = j.at("ffn_hidden");
  c.seed = j.at("seed");
  return c;
}

Vocabulary vocab_from_words(const std::vector<std::string>& words) {
  std::map<std::string, int> counts;
  for (std::size_t i = 1; i < words.size(); ++i) counts[words[i]] = 1;
  Vocabulary v = Vocabulary::build(counts);
  if (v.words() != words) throw DataError("checkpoint vocabulary is not in canonical order");
  return v;
}

}  // namespace

void save_model(const std::filesystem::path& path, const Model& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  out.write(kModelMagic, 8);
  put<std::uint32_t>(out, kFormatVersion);
  const nlohmann::json header = {{"config", config_json(m.params.config)},
                                 {"tokens", m.tokens.words()},
                                 {"labels", m.labels.words()},
                                 {"simplify_graphs", m.simplify_graphs},
                                 {"prune_joins", m.prune_joins},
                                 {"add_reverse", m.add_reverse}};
  put_string(out, header.dump());
  const auto tensors = m.params.tensors();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_string(out, name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t->rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t->cols()));
    out.write(reinterpret_cast<const char*>(t->data()), static_cast<std::streamsize>(t->size() * sizeof(double)));
  }
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  check_magic(in, kModelMagic, "checkpoint");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(get_string(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("corrupt checkpoint header: ") + e.what());
  }
  Model m;
  m.params = zeros_like(init_parameters(config_from_json(header.at("config"))));
  m.tokens = vocab_from_words(header.at("tokens").get<std::vector<std::string>>());
  m.labels = vocab_from_words(header.at("labels").get<std::vector<std::string>>());
  m.simplify_graphs = header.at("simplify_graphs");
  m.prune_joins = header.at("prune_joins");
  m.add_reverse = header.at("add_reverse");
  auto tensors = m.params.tensors();
  const auto count = get<std::uint32_t>(in);
  if (count != tensors.size()) throw DataError("checkpoint tensor count mismatch");
  for (auto& [name, t] : tensors) {
    const std::string stored = get_string(in);
    const auto rows = get<std::uint32_t>(in);
    const auto cols = get<std::uint32_t>(in);
    if (stored != name || rows != t->rows() || cols != t->cols()) {
      throw DataError("checkpoint tensor " + stored + " does not match " + name);
    }
    in.read(reinterpret_cast<char*>(t->data()), static_cast<std::streamsize>(t->size() * sizeof(double)));
    if (!in) throw DataError("truncated checkpoint");
  }
  return m;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write embeddings " + path.string());
  const std::uint32_t dim = table.empty() ? 0 : static_cast<std::uint32_t>(table.begin()->second.subwords.cols());
  out.write(kEmbedMagic, 8);
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint32_t>(out, dim);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(table.size()));
  for (const auto& [key, e] : table) {
    if (e.subwords.cols() != dim) throw DimensionError("embedding widths differ within one file");
    put_string(out, key);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.subwords.rows()));
    for (Eigen::Index r = 0; r < e.subwords.rows(); ++r) {
      for (Eigen::Index c = 0; c < e.subwords.cols(); ++c) put<float>(out, e.subwords(r, c));
    }
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.spans.size()));
    for (const auto& [b, en] : e.spans) {
      put<std::int32_t>(out, b);
      put<std::int32_t>(out, en);
    }
  }
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open embeddings " + path.string());
  check_magic(in, kEmbedMagic, "embedding");
  const auto dim = get<std::uint32_t>(in);
  const auto count = get<std::uint32_t>(in);
  EmbeddingTable table;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string key = get_string(in);
    EmbeddingEntry e;
    const auto rows = get<std::uint32_t>(in);
    e.subwords.resize(rows, dim);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < dim; ++c) e.subwords(r, c) = get<float>(in);
    }
    const auto tokens = get<std::uint32_t>(in);
    for (std::uint32_t t = 0; t < tokens; ++t) {
      const auto b = get<std::int32_t>(in);
      const auto en = get<std::int32_t>(in);
      if (b < 0 || en <= b || en > static_cast<std::int32_t>(rows)) {
        throw DataError("embedding entry " + key + " has an invalid subword span");
      }
      e.spans.emplace_back(b, en);
    }
    table.emplace(key, std::move(e));
  }
  return table;
}

Mat token_vectors(const EmbeddingEntry& e) {
  Mat out(static_cast<Eigen::Index>(e.spans.size()), e.subwords.cols());
  for (std::size_t t = 0; t < e.spans.size(); ++t) {
    const auto [b, en] = e.spans[t];
    out.row(static_cast<Eigen::Index>(t)) =
        e.subwords.middleRows(b, en - b).cast<double>().colwise().mean();
  }
  return out;
}

}  // namespace sqled
