#include "quotemark/seqmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "quotemark/errors.hpp"

using ordered_json = nlohmann::ordered_json;

namespace quotemark {

// ---------------------------------------------------------------------------
// RNG
// ---------------------------------------------------------------------------

uint64_t SplitMix64::next() {
  state_ += 0x9E3779B97F4A7C15ULL;
  uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

void SplitMix64::shuffle(std::vector<size_t>& v) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(next() % i);
    std::swap(v[i - 1], v[j]);
  }
}

// ---------------------------------------------------------------------------
// Context encoding
// ---------------------------------------------------------------------------

ContextEncoding encode_context(const Quotation& q,
                               const CandidateInventory& inventory,
                               const SeqModelConfig& config) {
  ContextEncoding enc;
  const auto& mentions = inventory.mentions;  // sorted by span

  std::vector<CharId> pre;  // textual order
  for (const auto& m : mentions) {
    if (m.span.end <= q.span.start) pre.push_back(m.char_id);
  }
  if (static_cast<int>(pre.size()) > config.pre_window)
    pre.erase(pre.begin(), pre.end() - config.pre_window);

  CharId after = kUnresolved;
  for (const auto& m : mentions) {
    if (m.span.start >= q.span.end) {
      after = m.char_id;
      break;
    }
  }

  std::vector<CharId> internal;  // distinct, first-occurrence order
  if (config.include_internal) {
    for (const auto& m : mentions) {
      if (m.span.start >= q.span.start && m.span.end <= q.span.end) {
        if (std::find(internal.begin(), internal.end(), m.char_id) ==
            internal.end())
          internal.push_back(m.char_id);
        if (static_cast<int>(internal.size()) >= config.max_internal) break;
      }
    }
  }

  // Slot assignment: recency rank over the pre-window, then extension.
  auto slot_of = [&](CharId c) -> int {
    for (size_t s = 0; s < enc.slot_map.size(); ++s)
      if (enc.slot_map[s] == c) return static_cast<int>(s);
    return -1;
  };
  auto assign = [&](CharId c) -> int {
    int s = slot_of(c);
    if (s >= 0) return s;
    if (static_cast<int>(enc.slot_map.size()) >= config.max_slots)
      return -1;  // slot overflow: mention is dropped to PAD
    enc.slot_map.push_back(c);
    return static_cast<int>(enc.slot_map.size()) - 1;
  };
  for (auto it = pre.rbegin(); it != pre.rend(); ++it) assign(*it);
  if (after != kUnresolved) assign(after);
  for (CharId c : internal) assign(c);

  // Token layout: pre (left-padded), SEP_POST, after, then optionally
  // SEP_INT and the internal section.
  const int pad = config.pad_id();
  for (int i = static_cast<int>(pre.size()); i < config.pre_window; ++i)
    enc.tokens.push_back(pad);
  for (CharId c : pre) {
    int s = slot_of(c);
    enc.tokens.push_back(s >= 0 ? s : pad);
  }
  enc.tokens.push_back(config.sep_post_id());
  if (after != kUnresolved) {
    int s = slot_of(after);
    enc.tokens.push_back(s >= 0 ? s : pad);
  } else {
    enc.tokens.push_back(pad);
  }
  if (config.include_internal) {
    enc.tokens.push_back(config.sep_int_id());
    for (CharId c : internal) {
      int s = slot_of(c);
      enc.tokens.push_back(s >= 0 ? s : pad);
    }
    for (int i = static_cast<int>(internal.size()); i < config.max_internal;
         ++i)
      enc.tokens.push_back(pad);
  }

  int speaker_slot =
      q.speaker_id == kUnknownChar ? -1 : slot_of(q.speaker_id);
  enc.label = speaker_slot >= 0 ? speaker_slot : config.other_class();
  return enc;
}

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

void SeqModelParams::check_shapes() const {
  const int V = config.vocab_size(), D = config.embedding_dim,
            H = config.hidden_dim, C = config.n_classes();
  auto bad = [&](const char* what) {
    throw Error(ErrorKind::ShapeMismatch, what);
  };
  if (embedding.rows() != V || embedding.cols() != D) bad("embedding");
  if (w_xh.rows() != D || w_xh.cols() != H) bad("w_xh");
  if (w_hh.rows() != H || w_hh.cols() != H) bad("w_hh");
  if (b_h.size() != H) bad("b_h");
  if (w_hy.rows() != H || w_hy.cols() != C) bad("w_hy");
  if (b_y.size() != C) bad("b_y");
  if (!embedding.allFinite() || !w_xh.allFinite() || !w_hh.allFinite() ||
      !b_h.allFinite() || !w_hy.allFinite() || !b_y.allFinite())
    bad("non-finite parameters");
}

SeqModelGradients SeqModelGradients::zeros(const SeqModelConfig& config) {
  SeqModelGradients g;
  const int V = config.vocab_size(), D = config.embedding_dim,
            H = config.hidden_dim, C = config.n_classes();
  g.embedding = Eigen::MatrixXd::Zero(V, D);
  g.w_xh = Eigen::MatrixXd::Zero(D, H);
  g.w_hh = Eigen::MatrixXd::Zero(H, H);
  g.b_h = Eigen::VectorXd::Zero(H);
  g.w_hy = Eigen::MatrixXd::Zero(H, C);
  g.b_y = Eigen::VectorXd::Zero(C);
  return g;
}

namespace {

struct ForwardTrace {
  std::vector<Eigen::VectorXd> hidden;  // h_1..h_T
  Eigen::VectorXd probs;
  double loss = 0.0;
};

ForwardTrace run_forward(const SeqModelParams& p,
                         const std::vector<int>& tokens, int label) {
  const int H = p.config.hidden_dim;
  ForwardTrace tr;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(H);
  tr.hidden.reserve(tokens.size());
  for (int tok : tokens) {
    if (tok < 0 || tok >= p.config.vocab_size())
      throw Error(ErrorKind::ShapeMismatch,
                  "token id " + std::to_string(tok) + " out of vocabulary");
    Eigen::VectorXd x = p.embedding.row(tok).transpose();
    Eigen::VectorXd a = p.w_xh.transpose() * x + p.w_hh.transpose() * h + p.b_h;
    h = a.array().tanh();
    tr.hidden.push_back(h);
  }
  Eigen::VectorXd logits = p.w_hy.transpose() * h + p.b_y;
  double mx = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - mx).exp();
  tr.probs = e / e.sum();
  if (label >= 0) {
    double pl = std::max(tr.probs(label), 1e-300);
    tr.loss = -std::log(pl);
  }
  return tr;
}

void backward_into(const SeqModelParams& p, const std::vector<int>& tokens,
                   int label, const ForwardTrace& tr, double scale,
                   SeqModelGradients& g) {
  Eigen::VectorXd dlogits = tr.probs;
  dlogits(label) -= 1.0;
  dlogits *= scale;
  const Eigen::VectorXd& h_last = tr.hidden.back();
  g.w_hy += h_last * dlogits.transpose();
  g.b_y += dlogits;
  Eigen::VectorXd dh = p.w_hy * dlogits;
  for (size_t t = tokens.size(); t-- > 0;) {
    const Eigen::VectorXd& h_t = tr.hidden[t];
    Eigen::VectorXd da =
        dh.array() * (1.0 - h_t.array().square());
    Eigen::VectorXd h_prev = t == 0
                                 ? Eigen::VectorXd::Zero(p.config.hidden_dim)
                                 : tr.hidden[t - 1];
    Eigen::VectorXd x = p.embedding.row(tokens[t]).transpose();
    g.w_xh += x * da.transpose();
    g.w_hh += h_prev * da.transpose();
    g.b_h += da;
    g.embedding.row(tokens[t]) += (p.w_xh * da).transpose();
    dh = p.w_hh * da;
  }
}

}  // namespace

Eigen::VectorXd forward_probabilities(const SeqModelParams& params,
                                      const std::vector<int>& tokens) {
  return run_forward(params, tokens, -1).probs;
}

double example_loss(const SeqModelParams& params, const ContextEncoding& ex) {
  return run_forward(params, ex.tokens, ex.label).loss;
}

double accumulate_gradients(const SeqModelParams& params,
                            const std::vector<ContextEncoding>& batch,
                            SeqModelGradients& grads) {
  if (batch.empty())
    throw Error(ErrorKind::EmptyDataset, "empty gradient batch");
  double total = 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    ForwardTrace tr = run_forward(params, ex.tokens, ex.label);
    total += tr.loss;
    backward_into(params, ex.tokens, ex.label, tr, scale, grads);
  }
  return total * scale;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

double mean_loss(const SeqModelParams& p,
                 const std::vector<ContextEncoding>& data,
                 const std::vector<size_t>& idx) {
  if (idx.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (size_t i : idx) s += example_loss(p, data[i]);
  return s / static_cast<double>(idx.size());
}

}  // namespace

TrainResult train_model(const std::vector<ContextEncoding>& dataset,
                        const SeqModelConfig& config) {
  if (dataset.empty())
    throw Error(ErrorKind::EmptyDataset, "train_model on empty dataset");
  const int L = config.sequence_length();
  for (const auto& ex : dataset) {
    if (static_cast<int>(ex.tokens.size()) != L)
      throw Error(ErrorKind::ShapeMismatch,
                  "encoding length " + std::to_string(ex.tokens.size()) +
                      " != configured " + std::to_string(L));
  }

  SplitMix64 rng(config.seed);
  TrainResult result;
  SeqModelParams& p = result.params;
  p.config = config;
  const int V = config.vocab_size(), D = config.embedding_dim,
            H = config.hidden_dim, C = config.n_classes();
  auto init_mat = [&](int r, int c) {
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = rng.uniform(-0.1, 0.1);
    return m;
  };
  p.embedding = init_mat(V, D);
  p.w_xh = init_mat(D, H);
  p.w_hh = init_mat(H, H);
  p.b_h = Eigen::VectorXd::Zero(H);
  p.w_hy = init_mat(H, C);
  p.b_y = Eigen::VectorXd::Zero(C);

  std::vector<size_t> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  size_t n_dev = static_cast<size_t>(
      std::floor(config.dev_fraction * static_cast<double>(order.size())));
  std::vector<size_t> dev_idx(order.end() - n_dev, order.end());
  std::vector<size_t> train_idx(order.begin(), order.end() - n_dev);
  if (train_idx.empty()) {
    train_idx = dev_idx;
    dev_idx.clear();
  }

  SeqModelParams best = p;
  double best_dev = std::numeric_limits<double>::infinity();
  int stale = 0;
  bool use_dev = !dev_idx.empty();

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(train_idx);
    for (size_t b = 0; b < train_idx.size();
         b += static_cast<size_t>(config.batch_size)) {
      size_t e = std::min(train_idx.size(),
                          b + static_cast<size_t>(config.batch_size));
      std::vector<ContextEncoding> batch;
      batch.reserve(e - b);
      for (size_t k = b; k < e; ++k) batch.push_back(dataset[train_idx[k]]);
      SeqModelGradients g = SeqModelGradients::zeros(config);
      double loss = accumulate_gradients(p, batch, g);
      if (!std::isfinite(loss))
        throw Error(ErrorKind::DivergenceDetected,
                    "non-finite loss at epoch " + std::to_string(epoch));
      const double lr = config.learning_rate;
      p.embedding -= lr * g.embedding;
      p.w_xh -= lr * g.w_xh;
      p.w_hh -= lr * g.w_hh;
      p.b_h -= lr * g.b_h;
      p.w_hy -= lr * g.w_hy;
      p.b_y -= lr * g.b_y;
    }
    EpochTrace et;
    et.epoch = epoch;
    et.train_loss = mean_loss(p, dataset, train_idx);
    et.dev_loss = use_dev ? mean_loss(p, dataset, dev_idx)
                          : std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(et.train_loss))
      throw Error(ErrorKind::DivergenceDetected,
                  "non-finite training loss at epoch " +
                      std::to_string(epoch));
    result.trace.push_back(et);
    if (use_dev) {
      if (et.dev_loss < best_dev - 1e-12) {
        best_dev = et.dev_loss;
        best = p;
        stale = 0;
      } else if (++stale >= config.patience) {
        break;
      }
    }
  }
  if (use_dev) result.params = best;
  return result;
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

CharId predict_class(const SeqModelParams& params, const ContextEncoding& ex) {
  params.check_shapes();
  Eigen::VectorXd probs = forward_probabilities(params, ex.tokens);
  int arg = 0;
  for (int i = 1; i < probs.size(); ++i)
    if (probs(i) > probs(arg)) arg = i;
  if (arg == params.config.other_class() ||
      arg >= static_cast<int>(ex.slot_map.size()))
    return kUnresolved;
  return ex.slot_map[arg];
}

Attribution predict_speaker(const SeqModelParams& params, const Quotation& q,
                            const CandidateInventory& inventory) {
  ContextEncoding ex = encode_context(q, inventory, params.config);
  Attribution a;
  a.quote_id = q.quote_id;
  a.method = AttributionMethod::SeqModel;
  a.predicted = ex.slot_map.empty() ? kUnresolved : predict_class(params, ex);
  return a;
}

std::vector<Attribution> predict_batch(const SeqModelParams& params,
                                       const std::vector<Quotation>& quotes,
                                       const CandidateInventory& inventory) {
  std::vector<Attribution> out;
  out.reserve(quotes.size());
  for (const auto& q : quotes)
    out.push_back(predict_speaker(params, q, inventory));
  return out;
}

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

namespace {

double rel_error(double a, double n) {
  double denom = std::max(std::abs(a) + std::abs(n), 1e-8);
  return std::abs(a - n) / denom;
}

double check_block(SeqModelParams& p, Eigen::MatrixXd& block,
                   const Eigen::MatrixXd& analytic, const ContextEncoding& ex,
                   double eps) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < block.rows(); ++i) {
    for (Eigen::Index j = 0; j < block.cols(); ++j) {
      double saved = block(i, j);
      block(i, j) = saved + eps;
      double up = example_loss(p, ex);
      block(i, j) = saved - eps;
      double dn = example_loss(p, ex);
      block(i, j) = saved;
      double numeric = (up - dn) / (2.0 * eps);
      worst = std::max(worst, rel_error(analytic(i, j), numeric));
    }
  }
  return worst;
}

double check_vec(SeqModelParams& p, Eigen::VectorXd& block,
                 const Eigen::VectorXd& analytic, const ContextEncoding& ex,
                 double eps) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < block.size(); ++i) {
    double saved = block(i);
    block(i) = saved + eps;
    double up = example_loss(p, ex);
    block(i) = saved - eps;
    double dn = example_loss(p, ex);
    block(i) = saved;
    double numeric = (up - dn) / (2.0 * eps);
    worst = std::max(worst, rel_error(analytic(i), numeric));
  }
  return worst;
}

}  // namespace

double gradient_check_against(const SeqModelParams& params,
                              const ContextEncoding& ex, double epsilon,
                              const SeqModelGradients& grads) {
  SeqModelParams p = params;  // perturbation scratch copy
  double worst = 0.0;
  worst = std::max(worst, check_block(p, p.embedding, grads.embedding, ex,
                                      epsilon));
  worst = std::max(worst, check_block(p, p.w_xh, grads.w_xh, ex, epsilon));
  worst = std::max(worst, check_block(p, p.w_hh, grads.w_hh, ex, epsilon));
  worst = std::max(worst, check_vec(p, p.b_h, grads.b_h, ex, epsilon));
  worst = std::max(worst, check_block(p, p.w_hy, grads.w_hy, ex, epsilon));
  worst = std::max(worst, check_vec(p, p.b_y, grads.b_y, ex, epsilon));
  return worst;
}

double gradient_check(const SeqModelParams& params, const ContextEncoding& ex,
                      double epsilon) {
  SeqModelGradients g = SeqModelGradients::zeros(params.config);
  accumulate_gradients(params, {ex}, g);
  return gradient_check_against(params, ex, epsilon, g);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

ordered_json mat_to_json(const Eigen::MatrixXd& m) {
  ordered_json j;
  j["shape"] = {m.rows(), m.cols()};
  std::vector<double> data;
  data.reserve(static_cast<size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) data.push_back(m(i, k));
  j["data"] = std::move(data);
  return j;
}

Eigen::MatrixXd mat_from_json(const ordered_json& j) {
  auto shape = j.at("shape");
  Eigen::Index r = shape.at(0).get<Eigen::Index>();
  Eigen::Index c = shape.at(1).get<Eigen::Index>();
  auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != r * c)
    throw Error(ErrorKind::ShapeMismatch, "matrix data does not fill shape");
  Eigen::MatrixXd m(r, c);
  size_t n = 0;
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = data[n++];
  return m;
}

ordered_json vec_to_json(const Eigen::VectorXd& v) {
  ordered_json j;
  j["shape"] = {v.size()};
  j["data"] = std::vector<double>(v.data(), v.data() + v.size());
  return j;
}

Eigen::VectorXd vec_from_json(const ordered_json& j) {
  auto data = j.at("data").get<std::vector<double>>();
  Eigen::VectorXd v(static_cast<Eigen::Index>(data.size()));
  for (size_t i = 0; i < data.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = data[i];
  return v;
}

}  // namespace

std::string model_to_json(const SeqModelParams& params) {
  ordered_json j;
  j["format"] = "quotemark-seqmodel";
  j["version"] = 1;
  ordered_json cfg;
  cfg["max_slots"] = params.config.max_slots;
  cfg["max_internal"] = params.config.max_internal;
  cfg["include_internal"] = params.config.include_internal;
  cfg["pre_window"] = params.config.pre_window;
  cfg["embedding_dim"] = params.config.embedding_dim;
  cfg["hidden_dim"] = params.config.hidden_dim;
  cfg["learning_rate"] = params.config.learning_rate;
  cfg["batch_size"] = params.config.batch_size;
  cfg["max_epochs"] = params.config.max_epochs;
  cfg["patience"] = params.config.patience;
  cfg["dev_fraction"] = params.config.dev_fraction;
  cfg["seed"] = params.config.seed;
  j["config"] = std::move(cfg);
  ordered_json pj;
  pj["embedding"] = mat_to_json(params.embedding);
  pj["w_xh"] = mat_to_json(params.w_xh);
  pj["w_hh"] = mat_to_json(params.w_hh);
  pj["b_h"] = vec_to_json(params.b_h);
  pj["w_hy"] = mat_to_json(params.w_hy);
  pj["b_y"] = vec_to_json(params.b_y);
  j["params"] = std::move(pj);
  return j.dump(2);
}

SeqModelParams model_from_json(const std::string& json_text) {
  ordered_json j = ordered_json::parse(json_text);
  if (j.value("format", std::string()) != "quotemark-seqmodel")
    throw Error(ErrorKind::ShapeMismatch, "not a seqmodel container");
  SeqModelParams p;
  const auto& cfg = j.at("config");
  p.config.max_slots = cfg.at("max_slots").get<int>();
  p.config.max_internal = cfg.at("max_internal").get<int>();
  p.config.include_internal = cfg.at("include_internal").get<bool>();
  p.config.pre_window = cfg.at("pre_window").get<int>();
  p.config.embedding_dim = cfg.at("embedding_dim").get<int>();
  p.config.hidden_dim = cfg.at("hidden_dim").get<int>();
  p.config.learning_rate = cfg.at("learning_rate").get<double>();
  p.config.batch_size = cfg.at("batch_size").get<int>();
  p.config.max_epochs = cfg.at("max_epochs").get<int>();
  p.config.patience = cfg.at("patience").get<int>();
  p.config.dev_fraction = cfg.at("dev_fraction").get<double>();
  p.config.seed = cfg.at("seed").get<uint64_t>();
  const auto& pj = j.at("params");
  p.embedding = mat_from_json(pj.at("embedding"));
  p.w_xh = mat_from_json(pj.at("w_xh"));
  p.w_hh = mat_from_json(pj.at("w_hh"));
  p.b_h = vec_from_json(pj.at("b_h"));
  p.w_hy = mat_from_json(pj.at("w_hy"));
  p.b_y = vec_from_json(pj.at("b_y"));
  p.check_shapes();
  return p;
}

std::string trace_to_csv(const std::vector<EpochTrace>& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,train_loss,dev_loss\n";
  for (const auto& t : trace) {
    out << t.epoch << "," << t.train_loss << ",";
    if (std::isfinite(t.dev_loss)) out << t.dev_loss;
    out << "\n";
  }
  return out.str();
}

}  // namespace quotemark
