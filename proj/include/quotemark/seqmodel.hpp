#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "quotemark/attrib.hpp"
#include "quotemark/corpus.hpp"
#include "quotemark/mentions.hpp"

namespace quotemark {

// Sequential speaker prediction: the characters mentioned around a
// quotation, reduced to recency-rank slots, feed a one-layer RNN that
// classifies which slot (or none) utters the quote.

struct SeqModelConfig {
  int max_slots = 10;     // slot vocabulary; class OTHER sits past it
  int max_internal = 4;   // padded length of the internal-mention section
  bool include_internal = false;
  int pre_window = 5;     // mentions taken before the quote
  int embedding_dim = 32;
  int hidden_dim = 64;
  double learning_rate = 0.05;
  int batch_size = 32;
  int max_epochs = 50;
  int patience = 5;       // early stop on stale dev loss
  double dev_fraction = 0.1;
  uint64_t seed = 0;

  int vocab_size() const { return max_slots + 4; }  // + specials
  int n_classes() const { return max_slots + 1; }   // + OTHER
  int pad_id() const { return max_slots; }
  int sep_pre_id() const { return max_slots + 1; }  // reserved
  int sep_post_id() const { return max_slots + 2; }
  int sep_int_id() const { return max_slots + 3; }
  int other_class() const { return max_slots; }
  int sequence_length() const {
    int L = pre_window + 1 + 1;  // pre, SEP_POST, after
    if (include_internal) L += 1 + max_internal;  // SEP_INT, internal
    return L;
  }
};

struct ContextEncoding {
  std::vector<int> tokens;       // fixed length per config
  std::vector<CharId> slot_map;  // slot index -> character
  int label = 0;                 // slot index or other_class()
};

// Recency-rank slots: 0 is the character mentioned most recently before
// the quote; characters first seen after/inside extend the map.
ContextEncoding encode_context(const Quotation& q,
                               const CandidateInventory& inventory,
                               const SeqModelConfig& config);

struct SeqModelParams {
  SeqModelConfig config;
  Eigen::MatrixXd embedding;  // V x D
  Eigen::MatrixXd w_xh;       // D x H
  Eigen::MatrixXd w_hh;       // H x H
  Eigen::VectorXd b_h;        // H
  Eigen::MatrixXd w_hy;       // H x C
  Eigen::VectorXd b_y;        // C

  void check_shapes() const;  // throws ShapeMismatch
};

struct SeqModelGradients {
  Eigen::MatrixXd embedding, w_xh, w_hh, w_hy;
  Eigen::VectorXd b_h, b_y;

  static SeqModelGradients zeros(const SeqModelConfig& config);
};

// Forward pass; probabilities sum to one.
Eigen::VectorXd forward_probabilities(const SeqModelParams& params,
                                      const std::vector<int>& tokens);

double example_loss(const SeqModelParams& params, const ContextEncoding& ex);

// Analytic gradient of the mean cross-entropy over a batch.
double accumulate_gradients(const SeqModelParams& params,
                            const std::vector<ContextEncoding>& batch,
                            SeqModelGradients& grads);

struct EpochTrace {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;  // NaN when no dev split
};

struct TrainResult {
  SeqModelParams params;
  std::vector<EpochTrace> trace;
};

TrainResult train_model(const std::vector<ContextEncoding>& dataset,
                        const SeqModelConfig& config);

// Argmax slot mapped back through slot_map; OTHER or an empty map is
// UNRESOLVED.
CharId predict_class(const SeqModelParams& params, const ContextEncoding& ex);

Attribution predict_speaker(const SeqModelParams& params, const Quotation& q,
                            const CandidateInventory& inventory);

std::vector<Attribution> predict_batch(const SeqModelParams& params,
                                       const std::vector<Quotation>& quotes,
                                       const CandidateInventory& inventory);

// Central finite differences against the analytic gradient over every
// parameter block; returns the max relative error.
double gradient_check(const SeqModelParams& params, const ContextEncoding& ex,
                      double epsilon);

// Same comparison against caller-supplied gradients (lets a corrupted
// backward pass be detected in tests).
double gradient_check_against(const SeqModelParams& params,
                              const ContextEncoding& ex, double epsilon,
                              const SeqModelGradients& grads);

// Model container: versioned JSON with config and flat parameter arrays.
std::string model_to_json(const SeqModelParams& params);
SeqModelParams model_from_json(const std::string& json_text);

std::string trace_to_csv(const std::vector<EpochTrace>& trace);

// Deterministic uniform numbers; seeded, platform-independent.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}
  uint64_t next();
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  // Fisher-Yates shuffle of an index vector.
  void shuffle(std::vector<size_t>& v);

 private:
  uint64_t state_;
};

}  // namespace quotemark
