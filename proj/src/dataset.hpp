#ifndef MIPLKIT_DATASET_HPP
#define MIPLKIT_DATASET_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "matrix.hpp"
#include "rng.hpp"

namespace miplkit {

// One multi-instance sample: a stack of instance vectors plus the
// candidate label set. truth is hidden supervision kept for evaluation
// (-1 = unknown). instance_labels is a synthetic-data diagnostic and is
// not serialized; labels >= num_classes mark negative instances.
struct Bag {
  Matrix instances;             // n x d
  std::vector<int> candidates;  // sorted ascending, subset of 0..k-1
  int truth = -1;
  std::vector<int> instance_labels;

  std::size_t size() const { return instances.rows(); }
};

struct MiplDataset {
  int num_classes = 0;  // k
  int dim = 0;          // d
  std::vector<Bag> bags;

  std::size_t size() const { return bags.size(); }
  double avg_instances() const;
  double avg_candidates() const;
};

// Synthetic bags with known ground truth. Positive instances are drawn
// around the truth class mean, negative instances around distractor
// means that live outside the label space. Class and distractor means
// sit on scaled coordinate axes so that every pair is exactly
// cluster_separation apart, which needs dim >= num_classes + num_distractors.
struct SynthConfig {
  int num_classes = 5;
  int num_distractors = 2;
  int false_positives = 1;  // r, candidates beyond the truth label
  int bags_per_class = 10;
  int min_instances = 5;
  int max_instances = 15;
  double min_positive_fraction = 0.3;
  double max_positive_fraction = 0.7;
  double cluster_separation = 6.0;
  int dim = 0;  // 0 = auto (num_classes + num_distractors)
  std::uint64_t seed = 1;
};

MiplDataset gen_synthetic(const SynthConfig& cfg);

// Candidate set for a bag whose truth is known: the truth label plus r false
// positives drawn uniformly without replacement from the other classes.
// Returned sorted ascending.
std::vector<int> corrupt_candidates(int truth, int num_classes, int r, Rng& rng);

// Disjoint partition; train size = round(ratio * m), ties toward train,
// clamped so both sides stay nonempty. Shuffle order comes from rng.
std::pair<MiplDataset, MiplDataset> split(const MiplDataset& ds, double ratio,
                                          Rng& rng);

// MIPL text format:
//   MIPL1 k=<int> d=<int> m=<int>
//   BAG n=<int> cand=<c0,c1,...> truth=<int|->
//   ...n lines of d space-separated doubles (shortest round-trip form)
// Blank lines are forbidden. Parse errors carry 1-based line numbers.
void save(const MiplDataset& ds, std::ostream& out);
void save(const MiplDataset& ds, const std::string& path);
MiplDataset load(std::istream& in, const std::string& name = "<stream>");
MiplDataset load(const std::string& path);

// Bag-to-vector reductions for single-instance PLL baselines.
Vec reduce_mean(const Bag& bag);    // d entries, per-dimension means
Vec reduce_maxmin(const Bag& bag);  // 2d entries, maxima then minima

}  // namespace miplkit

#endif  // MIPLKIT_DATASET_HPP
