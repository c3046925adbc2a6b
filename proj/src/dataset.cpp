#include "dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <system_error>

#include "errors.hpp"
#include "numeric.hpp"

namespace miplkit {

double MiplDataset::avg_instances() const {
  if (bags.empty()) return 0.0;
  double total = 0.0;
  for (const Bag& b : bags) total += static_cast<double>(b.size());
  return total / static_cast<double>(bags.size());
}

double MiplDataset::avg_candidates() const {
  if (bags.empty()) return 0.0;
  double total = 0.0;
  for (const Bag& b : bags) total += static_cast<double>(b.candidates.size());
  return total / static_cast<double>(bags.size());
}

namespace {

void validate_synth_config(const SynthConfig& cfg) {
  if (cfg.num_classes < 2) {
    fail(ErrorCode::kInvalidArgument, "gen_synthetic: need at least 2 classes");
  }
  if (cfg.false_positives >= cfg.num_classes) {
    fail(ErrorCode::kInvalidArgument,
         "gen_synthetic: r must be < k (got r=" +
             std::to_string(cfg.false_positives) + ", k=" +
             std::to_string(cfg.num_classes) + ")");
  }
  if (cfg.false_positives < 1) {
    fail(ErrorCode::kInvalidArgument, "gen_synthetic: r must be >= 1");
  }
  if (cfg.num_distractors < 0) {
    fail(ErrorCode::kInvalidArgument, "gen_synthetic: negative distractor count");
  }
  if (cfg.bags_per_class < 1) {
    fail(ErrorCode::kInvalidArgument, "gen_synthetic: bags_per_class must be >= 1");
  }
  if (cfg.min_instances < 1 || cfg.max_instances < cfg.min_instances) {
    fail(ErrorCode::kInvalidArgument, "gen_synthetic: bad instance count range");
  }
  if (!(cfg.min_positive_fraction > 0.0) || cfg.max_positive_fraction > 1.0 ||
      cfg.max_positive_fraction < cfg.min_positive_fraction) {
    fail(ErrorCode::kInvalidArgument,
         "gen_synthetic: positive fraction range must lie within (0,1]");
  }
  if (cfg.cluster_separation < 0.0) {
    fail(ErrorCode::kInvalidArgument, "gen_synthetic: negative separation");
  }
}

}  // namespace

MiplDataset gen_synthetic(const SynthConfig& cfg) {
  validate_synth_config(cfg);
  int num_means = cfg.num_classes + cfg.num_distractors;
  int dim = cfg.dim > 0 ? cfg.dim : num_means;
  if (dim < num_means) {
    fail(ErrorCode::kInvalidArgument,
         "gen_synthetic: dim " + std::to_string(dim) + " too small for " +
             std::to_string(num_means) + " separated means");
  }

  // Means at scale * e_i give pairwise distance scale * sqrt(2).
  double scale = cfg.cluster_separation / std::sqrt(2.0);

  Rng rng(cfg.seed);
  MiplDataset ds;
  ds.num_classes = cfg.num_classes;
  ds.dim = dim;
  ds.bags.reserve(static_cast<std::size_t>(cfg.num_classes) * cfg.bags_per_class);

  int span = cfg.max_instances - cfg.min_instances + 1;
  for (int truth = 0; truth < cfg.num_classes; ++truth) {
    for (int b = 0; b < cfg.bags_per_class; ++b) {
      Bag bag;
      bag.truth = truth;

      int n = cfg.min_instances +
              static_cast<int>(rng.next_below(static_cast<std::uint64_t>(span)));
      double frac = cfg.min_positive_fraction +
                    rng.next_uniform() *
                        (cfg.max_positive_fraction - cfg.min_positive_fraction);
      int positives = static_cast<int>(std::lround(frac * n));
      positives = std::clamp(positives, 1, n);
      if (cfg.num_distractors == 0) positives = n;  // nowhere to draw negatives

      bag.instances = Matrix(static_cast<std::size_t>(n),
                             static_cast<std::size_t>(dim));
      bag.instance_labels.resize(static_cast<std::size_t>(n));
      std::vector<int> slots(static_cast<std::size_t>(n));
      std::iota(slots.begin(), slots.end(), 0);
      rng.shuffle(slots);

      for (int i = 0; i < n; ++i) {
        int slot = slots[static_cast<std::size_t>(i)];
        int mean_axis;
        int label;
        if (i < positives) {
          mean_axis = truth;
          label = truth;
        } else {
          int d_idx = static_cast<int>(
              rng.next_below(static_cast<std::uint64_t>(cfg.num_distractors)));
          mean_axis = cfg.num_classes + d_idx;
          label = cfg.num_classes + d_idx;
        }
        auto row = bag.instances.row(static_cast<std::size_t>(slot));
        for (int c = 0; c < dim; ++c) row[static_cast<std::size_t>(c)] = rng.next_gauss();
        row[static_cast<std::size_t>(mean_axis)] += scale;
        bag.instance_labels[static_cast<std::size_t>(slot)] = label;
      }

      bag.candidates =
          corrupt_candidates(truth, cfg.num_classes, cfg.false_positives, rng);

      ds.bags.push_back(std::move(bag));
    }
  }
  return ds;
}

std::vector<int> corrupt_candidates(int truth, int num_classes, int r,
                                    Rng& rng) {
  if (truth < 0 || truth >= num_classes) {
    fail(ErrorCode::kInvalidArgument, "corrupt_candidates: truth outside 0..k-1");
  }
  if (r < 0 || r >= num_classes) {
    fail(ErrorCode::kInvalidArgument, "corrupt_candidates: need 0 <= r < k");
  }
  std::vector<int> others;
  others.reserve(static_cast<std::size_t>(num_classes) - 1);
  for (int c = 0; c < num_classes; ++c) {
    if (c != truth) others.push_back(c);
  }
  for (int pick = 0; pick < r; ++pick) {
    std::size_t remaining = others.size() - static_cast<std::size_t>(pick);
    std::size_t j = static_cast<std::size_t>(pick) +
                    static_cast<std::size_t>(rng.next_below(remaining));
    std::swap(others[static_cast<std::size_t>(pick)], others[j]);
  }
  std::vector<int> cand(others.begin(), others.begin() + r);
  cand.push_back(truth);
  std::sort(cand.begin(), cand.end());
  return cand;
}

std::pair<MiplDataset, MiplDataset> split(const MiplDataset& ds, double ratio,
                                          Rng& rng) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "split: ratio must lie in (0,1)");
  }
  if (ds.size() < 2) {
    fail(ErrorCode::kInvalidArgument, "split: need at least 2 bags");
  }
  std::size_t m = ds.size();
  auto train_size = static_cast<std::size_t>(
      std::floor(ratio * static_cast<double>(m) + 0.5));
  train_size = std::clamp<std::size_t>(train_size, 1, m - 1);

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  MiplDataset train{ds.num_classes, ds.dim, {}};
  MiplDataset test{ds.num_classes, ds.dim, {}};
  train.bags.reserve(train_size);
  test.bags.reserve(m - train_size);
  for (std::size_t i = 0; i < m; ++i) {
    (i < train_size ? train : test).bags.push_back(ds.bags[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

namespace {

[[noreturn]] void parse_fail(const std::string& name, std::size_t line,
                             const std::string& what) {
  fail(ErrorCode::kParse, name + ":" + std::to_string(line) + ": " + what);
}

bool parse_int(std::string_view text, int& out) {
  auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

}  // namespace

void save(const MiplDataset& ds, std::ostream& out) {
  out << "MIPL1 k=" << ds.num_classes << " d=" << ds.dim << " m=" << ds.size()
      << "\n";
  for (const Bag& bag : ds.bags) {
    out << "BAG n=" << bag.size() << " cand=";
    for (std::size_t i = 0; i < bag.candidates.size(); ++i) {
      if (i) out << ',';
      out << bag.candidates[i];
    }
    out << " truth=";
    if (bag.truth >= 0) {
      out << bag.truth;
    } else {
      out << '-';
    }
    out << "\n";
    for (std::size_t r = 0; r < bag.size(); ++r) {
      auto row = bag.instances.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out << ' ';
        out << format_double(row[c]);
      }
      out << "\n";
    }
  }
}

void save(const MiplDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path + " for writing");
  save(ds, out);
  out.flush();
  if (!out) fail(ErrorCode::kIo, "write to " + path + " failed");
}

MiplDataset load(std::istream& in, const std::string& name) {
  std::string line;
  std::size_t line_no = 0;

  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) parse_fail(name, line_no, "blank line");
    return true;
  };

  if (!next_line()) fail(ErrorCode::kParse, name + ": empty file");
  int k = 0, d = 0, m = 0;
  {
    std::istringstream header(line);
    std::string magic, kf, df, mf;
    header >> magic >> kf >> df >> mf;
    if (magic != "MIPL1" || kf.rfind("k=", 0) != 0 || df.rfind("d=", 0) != 0 ||
        mf.rfind("m=", 0) != 0 || !parse_int(kf.substr(2), k) ||
        !parse_int(df.substr(2), d) || !parse_int(mf.substr(2), m)) {
      parse_fail(name, line_no, "malformed header, expected MIPL1 k= d= m=");
    }
    std::string extra;
    if (header >> extra) parse_fail(name, line_no, "trailing content in header");
    if (k < 1 || d < 1 || m < 0) parse_fail(name, line_no, "bad header values");
  }

  MiplDataset ds;
  ds.num_classes = k;
  ds.dim = d;
  ds.bags.reserve(static_cast<std::size_t>(m));

  for (int bag_idx = 0; bag_idx < m; ++bag_idx) {
    if (!next_line()) {
      fail(ErrorCode::kParse,
           name + ": expected " + std::to_string(m) + " bags, got " +
               std::to_string(bag_idx));
    }
    std::istringstream bag_line(line);
    std::string tag, nf, cf, tf;
    bag_line >> tag >> nf >> cf >> tf;
    int n = 0;
    if (tag != "BAG" || nf.rfind("n=", 0) != 0 || cf.rfind("cand=", 0) != 0 ||
        tf.rfind("truth=", 0) != 0 || !parse_int(nf.substr(2), n)) {
      parse_fail(name, line_no, "malformed bag record");
    }
    std::string extra;
    if (bag_line >> extra) parse_fail(name, line_no, "trailing content in bag record");
    if (n < 1) parse_fail(name, line_no, "bag must contain at least one instance");

    Bag bag;
    std::string cand_text = cf.substr(5);
    std::size_t pos = 0;
    while (pos <= cand_text.size()) {
      std::size_t comma = cand_text.find(',', pos);
      std::string_view token(cand_text.data() + pos,
                             (comma == std::string::npos ? cand_text.size() : comma) - pos);
      int c = 0;
      if (token.empty() || !parse_int(token, c)) {
        parse_fail(name, line_no, "malformed candidate list");
      }
      if (c < 0 || c >= k) {
        parse_fail(name, line_no,
                   "candidate index " + std::to_string(c) + " outside 0.." +
                       std::to_string(k - 1));
      }
      bag.candidates.push_back(c);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    std::sort(bag.candidates.begin(), bag.candidates.end());
    if (std::adjacent_find(bag.candidates.begin(), bag.candidates.end()) !=
        bag.candidates.end()) {
      parse_fail(name, line_no, "duplicate candidate label");
    }
    if (bag.candidates.empty()) parse_fail(name, line_no, "empty candidate set");

    std::string truth_text = tf.substr(6);
    if (truth_text == "-") {
      bag.truth = -1;
    } else {
      int t = 0;
      if (!parse_int(truth_text, t)) parse_fail(name, line_no, "malformed truth field");
      if (!std::binary_search(bag.candidates.begin(), bag.candidates.end(), t)) {
        parse_fail(name, line_no,
                   "truth " + std::to_string(t) + " not in candidate set");
      }
      bag.truth = t;
    }

    bag.instances = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
    for (int r = 0; r < n; ++r) {
      if (!next_line()) {
        fail(ErrorCode::kParse, name + ": unexpected end of file inside bag");
      }
      const char* ptr = line.data();
      const char* end = line.data() + line.size();
      auto row = bag.instances.row(static_cast<std::size_t>(r));
      for (int c = 0; c < d; ++c) {
        while (ptr < end && *ptr == ' ') ++ptr;
        double value = 0.0;
        auto res = std::from_chars(ptr, end, value);
        if (res.ec != std::errc()) {
          parse_fail(name, line_no, "expected " + std::to_string(d) +
                                        " values, malformed value at column " +
                                        std::to_string(c));
        }
        if (!std::isfinite(value)) parse_fail(name, line_no, "non-finite value");
        row[static_cast<std::size_t>(c)] = value;
        ptr = res.ptr;
      }
      while (ptr < end && *ptr == ' ') ++ptr;
      if (ptr != end) {
        parse_fail(name, line_no,
                   "instance line has more than " + std::to_string(d) + " values");
      }
    }
    ds.bags.push_back(std::move(bag));
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) parse_fail(name, line_no, "content after last bag");
    parse_fail(name, line_no, "blank line");
  }
  return ds;
}

MiplDataset load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  return load(in, path);
}

Vec reduce_mean(const Bag& bag) {
  if (bag.size() == 0) fail(ErrorCode::kInvalidArgument, "reduce_mean: empty bag");
  std::size_t d = bag.instances.cols();
  Vec out(d, 0.0);
  for (std::size_t r = 0; r < bag.size(); ++r) {
    axpy(1.0, bag.instances.row(r), out);
  }
  for (double& v : out) v /= static_cast<double>(bag.size());
  return out;
}

Vec reduce_maxmin(const Bag& bag) {
  if (bag.size() == 0) fail(ErrorCode::kInvalidArgument, "reduce_maxmin: empty bag");
  std::size_t d = bag.instances.cols();
  Vec out(2 * d);
  auto first = bag.instances.row(0);
  for (std::size_t c = 0; c < d; ++c) {
    out[c] = first[c];
    out[d + c] = first[c];
  }
  for (std::size_t r = 1; r < bag.size(); ++r) {
    auto row = bag.instances.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      out[c] = std::max(out[c], row[c]);
      out[d + c] = std::min(out[d + c], row[c]);
    }
  }
  return out;
}

}  // namespace miplkit
