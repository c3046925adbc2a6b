#ifndef MIPLKIT_MODEL_HPP
#define MIPLKIT_MODEL_HPP

// The bag classifier: per-instance feature extractor (identity or a single
// ReLU hidden layer), gated attention over instances, attention-weighted
// aggregation into one bag feature, and a linear softmax head. forward caches
// every intermediate so backward can produce analytic gradients for all
// parameter blocks; the gradients are checked against finite differences.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "matrix.hpp"

namespace miplkit {

enum class Extractor { kIdentity, kMlp };

// Single-vector baselines collapse each bag before the model sees it.
enum class BagReduction { kNone, kMean, kMaxMin };

struct ModelParams {
  Extractor extractor = Extractor::kIdentity;
  BagReduction reduction = BagReduction::kNone;
  int input_dim = 0;    // dim the extractor consumes (after any reduction)
  int feature_dim = 0;  // post-extractor dim
  int num_classes = 0;

  Matrix hidden_weight;  // feature_dim x input_dim, mlp only
  Vec hidden_bias;       // feature_dim, mlp only

  // gated attention: sigm( combine . ( tanh(content) * sigm(gate) ) )
  Matrix attn_content_weight;  // num_classes x feature_dim
  Matrix attn_gate_weight;     // num_classes x feature_dim
  Vec attn_content_bias;       // num_classes
  Vec attn_gate_bias;          // num_classes
  Vec attn_combine;            // num_classes

  Matrix class_weight;  // num_classes x feature_dim
  Vec class_bias;       // num_classes

  friend bool operator==(const ModelParams& a, const ModelParams& b) = default;
};

// Fresh parameters with every entry ~ uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)),
// drawn in declaration order (identity extractor draws nothing for the hidden
// layer). feature_dim is forced to input_dim for the identity extractor.
ModelParams init_params(int input_dim, int feature_dim, int num_classes,
                        Extractor extractor, BagReduction reduction, Rng& rng);

// Same shapes, all entries zero. Gradients and optimizer velocity reuse the
// ModelParams layout so the three can be walked in lockstep.
ModelParams zeros_like(const ModelParams& p);

// Named views over the parameter storage, in reporting order. The classifier
// weight and bias form a single block; a block may span several arrays.
struct ParamBlock {
  const char* name;
  std::vector<std::span<double>> parts;
};
std::vector<ParamBlock> param_blocks(ModelParams& p);

struct ForwardTrace {
  Matrix input;       // instances after any reduction, n x input_dim
  Matrix hidden_pre;  // pre-ReLU activations, n x feature_dim (mlp only)
  Matrix features;    // n x feature_dim
  Matrix content;     // tanh branch outputs, n x num_classes
  Matrix gate;        // sigm branch outputs, n x num_classes
  Vec score;          // pre-sigmoid attention, n
  Vec attn;           // attention scores in (0,1), n
  double attn_sum = 0.0;
  Vec agg;     // bag feature, feature_dim
  Vec logits;  // num_classes
  Vec probs;   // softmax output, num_classes
};

// The composition stages, usable on their own.
Matrix extract(const ModelParams& p, const Matrix& input);
Vec attention_scores(const ModelParams& p, const Matrix& features);
Vec aggregate(const Vec& attn, const Matrix& features);  // sum a_j h_j / sum a_j
Vec classify(const ModelParams& p, const Vec& agg);      // softmax probs

ForwardTrace forward(const ModelParams& p, const Matrix& instances);
ForwardTrace forward(const ModelParams& p, const Bag& bag);

// Reverse pass. grad_probs is dL/dp (softmax jacobian applied here), grad_attn
// is dL/da per instance (empty = zero). Returns gradients in ModelParams shape.
ModelParams backward(const ModelParams& p, const ForwardTrace& trace,
                     const Vec& grad_probs, const Vec& grad_attn);

int predict(const ModelParams& p, const Bag& bag);

// Counts of instance attention scores over `bins` uniform bins on [0,1];
// a score of exactly 1 lands in the last bin.
std::vector<std::size_t> attention_histogram(const ModelParams& p,
                                             const MiplDataset& ds, int bins);

// Checkpoint format: header line
//   DEMIPL1 d=<int> dprime=<int> k=<int> extractor=<id|mlp> [reduction=<mean|maxmin>]
// then one line per parameter array in declaration order, "<name> <v0> <v1> ...",
// floats as 17-significant-digit decimals; round-trip is bit exact.
void save_model(const ModelParams& p, std::ostream& out);
void save_model(const ModelParams& p, const std::string& path);
ModelParams load_model(std::istream& in, const std::string& name = "<stream>");
ModelParams load_model(const std::string& path);

}  // namespace miplkit

#endif  // MIPLKIT_MODEL_HPP
