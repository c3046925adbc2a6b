// miplkit command line. Talks to the library exclusively through the C API.
//
// Exit codes: 0 success, 1 runtime/validation failure, 2 usage error.

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "miplkit/miplkit.h"

namespace {

// ------------------------------------------------------------------
// plumbing

[[noreturn]] void die_usage(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  std::exit(2);
}

int exit_code_of(mk_status s) {
  // parse/numeric problems are runtime failures; bad arguments and
  // unreadable files are the caller's mistake
  return (s == MK_ERR_PARSE || s == MK_ERR_NUMERIC || s == MK_ERR_INTERNAL)
             ? 1
             : 2;
}

[[noreturn]] void die_status(mk_status s) {
  std::cerr << "error: " << mk_last_error() << "\n";
  std::exit(exit_code_of(s));
}

void check(mk_status s) {
  if (s != MK_OK) die_status(s);
}

std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct dataset_free {
  void operator()(mk_dataset* p) const { mk_dataset_free(p); }
};
struct model_free {
  void operator()(mk_model* p) const { mk_model_free(p); }
};
struct history_free {
  void operator()(mk_history* p) const { mk_history_free(p); }
};
using dataset_ptr = std::unique_ptr<mk_dataset, dataset_free>;
using model_ptr = std::unique_ptr<mk_model, model_free>;
using history_ptr = std::unique_ptr<mk_history, history_free>;

// ------------------------------------------------------------------
// options: every value is addressable as a dotted config key; most also
// have a command-line flag. Flags win over the config file.

struct Opt {
  const char* key;   // dotted config key
  const char* flag;  // long flag without the leading --, may be null
  char short_flag;   // 0 = none
  bool is_switch;    // takes no value, presence means "1"
};

const Opt kGenOpts[] = {
    {"synth.num_classes", "k", 0, false},
    {"synth.num_distractors", "distractors", 0, false},
    {"synth.false_positives", "r", 0, false},
    {"synth.bags_per_class", "bags-per-class", 0, false},
    {"synth.min_instances", "min-instances", 0, false},
    {"synth.max_instances", "max-instances", 0, false},
    {"synth.min_positive_fraction", "min-pos-frac", 0, false},
    {"synth.max_positive_fraction", "max-pos-frac", 0, false},
    {"synth.cluster_separation", "sep", 0, false},
    {"synth.dim", "dim", 0, false},
    {"synth.seed", "seed", 0, false},
    {"gen.out", "out", 'o', false},
};

const Opt kBagifyOpts[] = {
    {"bagify.dir", "dir", 0, false},
    {"bagify.labels", "labels", 0, false},
    {"bagify.out", "out", 'o', false},
    {"bagify.false_positives", "r", 0, false},
    {"bagify.num_classes", "k", 0, false},
    {"bagify.candidate_seed", "cand-seed", 0, false},
    {"baggen.generator", "generator", 0, false},
    {"baggen.sbn_blob", "sbn-blob", 0, false},
    {"baggen.sbn_stride", "sbn-stride", 0, false},
    {"baggen.kmeans_k", "kmeans-k", 0, false},
    {"baggen.kmeans_iters", "kmeans-iters", 0, false},
    {"baggen.sift_grid_x", "sift-grid-x", 0, false},
    {"baggen.sift_grid_y", "sift-grid-y", 0, false},
    {"baggen.sift_patch", "sift-patch", 0, false},
    {"baggen.seed", "seed", 0, false},
};

const Opt kTrainOnlyOpts[] = {
    {"train.data", "data", 0, false},
    {"train.test", "test", 0, false},
    {"train.model_out", "model-out", 0, false},
    {"train.history_out", "history-out", 0, false},
    {"train.weights_csv", "weights-csv", 0, false},
};

// shared by train and experiment
const Opt kTrainCfgOpts[] = {
    {"train.lr_max", "lr-max", 0, false},
    {"train.lr_min", "lr-min", 0, false},
    {"train.momentum", "momentum", 0, false},
    {"train.weight_decay", "weight-decay", 0, false},
    {"train.epochs", "epochs", 0, false},
    {"train.batch_size", "batch-size", 0, false},
    {"train.attention_loss_weight", "att-weight", 0, false},
    {"train.seed", "seed", 0, false},
    {"train.variant", "variant", 0, false},
    {"train.extractor", "extractor", 0, false},
    {"train.hidden_dim", "hidden-dim", 0, false},
};

const Opt kEvalOpts[] = {
    {"eval.model", "model", 0, false},
    {"eval.data", "data", 0, false},
};

const Opt kExperimentOnlyOpts[] = {
    {"experiment.variants", "variants", 0, false},
    {"experiment.r", "r", 0, false},
    {"experiment.runs", "runs", 0, false},
    {"experiment.ratio", "ratio", 0, false},
    {"experiment.out", "out", 'o', false},
    {"synth.num_classes", "k", 0, false},
    {"synth.num_distractors", "distractors", 0, false},
    {"synth.bags_per_class", "bags-per-class", 0, false},
    {"synth.min_instances", "min-instances", 0, false},
    {"synth.max_instances", "max-instances", 0, false},
    {"synth.min_positive_fraction", "min-pos-frac", 0, false},
    {"synth.max_positive_fraction", "max-pos-frac", 0, false},
    {"synth.cluster_separation", "sep", 0, false},
    {"synth.dim", "dim", 0, false},
    {"synth.seed", "synth-seed", 0, false},
};

const Opt kGradcheckOpts[] = {
    {"gradcheck.seed", "seed", 0, false},
    {"gradcheck.configs", "configs", 0, false},
    {"gradcheck.perturb_bug", "perturb-bug", 0, true},
};

const Opt kAttHistOpts[] = {
    {"atthist.model", "model", 0, false},
    {"atthist.data", "data", 0, false},
    {"atthist.bins", "bins", 0, false},
    {"atthist.out", "out", 'o', false},
};

std::vector<Opt> command_opts(const std::string& cmd) {
  std::vector<Opt> opts;
  auto add = [&opts](const Opt* table, std::size_t n) {
    opts.insert(opts.end(), table, table + n);
  };
  if (cmd == "gen") {
    add(kGenOpts, std::size(kGenOpts));
  } else if (cmd == "bagify") {
    add(kBagifyOpts, std::size(kBagifyOpts));
  } else if (cmd == "train") {
    add(kTrainOnlyOpts, std::size(kTrainOnlyOpts));
    add(kTrainCfgOpts, std::size(kTrainCfgOpts));
  } else if (cmd == "eval") {
    add(kEvalOpts, std::size(kEvalOpts));
  } else if (cmd == "experiment") {
    add(kExperimentOnlyOpts, std::size(kExperimentOnlyOpts));
    add(kTrainCfgOpts, std::size(kTrainCfgOpts));
  } else if (cmd == "gradcheck") {
    add(kGradcheckOpts, std::size(kGradcheckOpts));
  } else if (cmd == "att-hist") {
    add(kAttHistOpts, std::size(kAttHistOpts));
  }
  return opts;
}

// every dotted key any command understands; config files are validated
// against this so one file can serve several commands
std::vector<std::string> key_universe() {
  std::vector<std::string> keys;
  for (const char* cmd :
       {"gen", "bagify", "train", "eval", "experiment", "gradcheck",
        "att-hist"}) {
    for (const Opt& o : command_opts(cmd)) keys.push_back(o.key);
  }
  return keys;
}

using Resolved = std::map<std::string, std::string>;

void load_config_file(const std::string& path, Resolved& out) {
  std::ifstream in(path);
  if (!in) die_usage("cannot open config file '" + path + "'");
  std::vector<std::string> universe = key_universe();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv(line);
    while (!sv.empty() && (sv.front() == ' ' || sv.front() == '\t')) {
      sv.remove_prefix(1);
    }
    if (sv.empty() || sv.front() == '#') continue;
    auto eq = sv.find('=');
    if (eq == std::string_view::npos) {
      die_usage(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    auto trim = [](std::string_view s) {
      while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
      }
      while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                            s.back() == '\r')) {
        s.remove_suffix(1);
      }
      return s;
    };
    std::string key(trim(sv.substr(0, eq)));
    std::string value(trim(sv.substr(eq + 1)));
    if (key.empty()) {
      die_usage(path + ":" + std::to_string(lineno) + ": empty key");
    }
    bool known = false;
    for (const std::string& k : universe) known = known || k == key;
    if (!known) {
      die_usage(path + ":" + std::to_string(lineno) + ": unknown config key '" +
                key + "'");
    }
    out[key] = value;
  }
}

// parse `--config FILE` plus the command's flags into dotted-key values
Resolved parse_args(const std::string& cmd, const std::vector<std::string>& args,
                    void (*print_usage)()) {
  const std::vector<Opt> opts = command_opts(cmd);
  Resolved file_values;
  Resolved flag_values;
  bool have_config = false;

  auto find_long = [&opts](std::string_view name) -> const Opt* {
    for (const Opt& o : opts) {
      if (o.flag != nullptr && name == o.flag) return &o;
    }
    return nullptr;
  };
  auto find_short = [&opts](char c) -> const Opt* {
    for (const Opt& o : opts) {
      if (o.short_flag == c) return &o;
    }
    return nullptr;
  };

  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "-h" || a == "--help") {
      print_usage();
      std::exit(0);
    }
    std::string name;
    std::string value;
    bool have_value = false;
    const Opt* opt = nullptr;

    if (a.rfind("--", 0) == 0) {
      name = a.substr(2);
      auto eq = name.find('=');
      if (eq != std::string::npos) {
        value = name.substr(eq + 1);
        name = name.substr(0, eq);
        have_value = true;
      }
      if (name == "config") {
        if (have_config) die_usage("duplicate --config");
        if (!have_value) {
          if (i + 1 >= args.size()) die_usage("--config needs a file");
          value = args[++i];
        }
        load_config_file(value, file_values);
        have_config = true;
        continue;
      }
      opt = find_long(name);
      if (opt == nullptr) {
        die_usage("unknown flag '--" + name + "' for " + cmd);
      }
    } else if (a.size() == 2 && a[0] == '-' && a != "--") {
      opt = find_short(a[1]);
      if (opt == nullptr) die_usage("unknown flag '" + a + "' for " + cmd);
      name = opt->flag;
    } else {
      die_usage("unexpected argument '" + a + "'");
    }

    if (opt->is_switch) {
      flag_values[opt->key] = have_value ? value : "1";
      continue;
    }
    if (!have_value) {
      if (i + 1 >= args.size()) die_usage("--" + name + " needs a value");
      value = args[++i];
    }
    flag_values[opt->key] = value;
  }

  Resolved merged = file_values;
  for (const auto& [k, v] : flag_values) merged[k] = v;
  // drop file-supplied keys this command does not understand
  Resolved out;
  for (const Opt& o : opts) {
    auto it = merged.find(o.key);
    if (it != merged.end()) out[o.key] = it->second;
  }
  return out;
}

// ------------------------------------------------------------------
// typed accessors over the resolved map; absent keys keep the caller's
// default so the C API config structs stay the single source of truth

void set_int(const Resolved& r, const std::string& key, int& target) {
  auto it = r.find(key);
  if (it == r.end()) return;
  const std::string& s = it->second;
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    die_usage("invalid integer for " + key + ": '" + s + "'");
  }
  target = v;
}

void set_double(const Resolved& r, const std::string& key, double& target) {
  auto it = r.find(key);
  if (it == r.end()) return;
  const std::string& s = it->second;
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    die_usage("invalid number for " + key + ": '" + s + "'");
  }
  target = v;
}

void set_u64(const Resolved& r, const std::string& key, uint64_t& target) {
  auto it = r.find(key);
  if (it == r.end()) return;
  const std::string& s = it->second;
  uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    die_usage("invalid seed for " + key + ": '" + s + "'");
  }
  target = v;
}

void set_string(const Resolved& r, const std::string& key,
                std::string& target) {
  auto it = r.find(key);
  if (it != r.end()) target = it->second;
}

std::string require(const Resolved& r, const std::string& key,
                    const std::string& flag) {
  auto it = r.find(key);
  if (it == r.end() || it->second.empty()) {
    die_usage("missing " + flag + " (" + key + ")");
  }
  return it->second;
}

void echo(const std::string& key, const std::string& value) {
  std::cerr << "config " << key << "=" << value << "\n";
}

int env_threads() {
  const char* s = std::getenv("MIPLKIT_THREADS");
  if (s == nullptr || *s == '\0') return 0;
  int v = 0;
  auto res = std::from_chars(s, s + std::strlen(s), v);
  if (res.ec != std::errc() || *res.ptr != '\0' || v < 0) {
    die_usage(std::string("invalid MIPLKIT_THREADS '") + s + "'");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& s,
                                    const std::string& what) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto comma = s.find(',', start);
    std::string item = s.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    if (item.empty()) die_usage("empty entry in " + what + " list '" + s + "'");
    out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::ostream& open_out(std::ofstream& file, const std::string& path) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) die_usage("cannot open '" + path + "' for writing");
  return file;
}

void finish_out(std::ofstream& file, const std::string& path) {
  if (path.empty()) {
    std::cout.flush();
    return;
  }
  file.close();
  if (!file) die_usage("error writing '" + path + "'");
}

// ------------------------------------------------------------------
// shared config assembly

mk_synth_config read_synth(const Resolved& r) {
  mk_synth_config sc;
  mk_synth_config_init(&sc);
  set_int(r, "synth.num_classes", sc.num_classes);
  set_int(r, "synth.num_distractors", sc.num_distractors);
  set_int(r, "synth.false_positives", sc.false_positives);
  set_int(r, "synth.bags_per_class", sc.bags_per_class);
  set_int(r, "synth.min_instances", sc.min_instances);
  set_int(r, "synth.max_instances", sc.max_instances);
  set_double(r, "synth.min_positive_fraction", sc.min_positive_fraction);
  set_double(r, "synth.max_positive_fraction", sc.max_positive_fraction);
  set_double(r, "synth.cluster_separation", sc.cluster_separation);
  set_int(r, "synth.dim", sc.dim);
  set_u64(r, "synth.seed", sc.seed);
  return sc;
}

void echo_synth(const mk_synth_config& sc) {
  echo("synth.num_classes", std::to_string(sc.num_classes));
  echo("synth.num_distractors", std::to_string(sc.num_distractors));
  echo("synth.false_positives", std::to_string(sc.false_positives));
  echo("synth.bags_per_class", std::to_string(sc.bags_per_class));
  echo("synth.min_instances", std::to_string(sc.min_instances));
  echo("synth.max_instances", std::to_string(sc.max_instances));
  echo("synth.min_positive_fraction", fmt(sc.min_positive_fraction));
  echo("synth.max_positive_fraction", fmt(sc.max_positive_fraction));
  echo("synth.cluster_separation", fmt(sc.cluster_separation));
  echo("synth.dim", std::to_string(sc.dim));
  echo("synth.seed", std::to_string(sc.seed));
}

// variant/extractor strings must outlive the returned struct
mk_train_config read_train_cfg(const Resolved& r, std::string& variant,
                               std::string& extractor) {
  mk_train_config tc;
  mk_train_config_init(&tc);
  variant = tc.variant;
  extractor = tc.extractor;
  set_double(r, "train.lr_max", tc.lr_max);
  set_double(r, "train.lr_min", tc.lr_min);
  set_double(r, "train.momentum", tc.momentum);
  set_double(r, "train.weight_decay", tc.weight_decay);
  set_int(r, "train.epochs", tc.epochs);
  set_int(r, "train.batch_size", tc.batch_size);
  set_double(r, "train.attention_loss_weight", tc.attention_loss_weight);
  set_u64(r, "train.seed", tc.seed);
  set_string(r, "train.variant", variant);
  set_string(r, "train.extractor", extractor);
  set_int(r, "train.hidden_dim", tc.hidden_dim);
  tc.variant = variant.c_str();
  tc.extractor = extractor.c_str();
  return tc;
}

void echo_train_cfg(const mk_train_config& tc) {
  echo("train.lr_max", fmt(tc.lr_max));
  echo("train.lr_min", fmt(tc.lr_min));
  echo("train.momentum", fmt(tc.momentum));
  echo("train.weight_decay", fmt(tc.weight_decay));
  echo("train.epochs", std::to_string(tc.epochs));
  echo("train.batch_size", std::to_string(tc.batch_size));
  echo("train.attention_loss_weight", fmt(tc.attention_loss_weight));
  echo("train.seed", std::to_string(tc.seed));
  echo("train.variant", tc.variant);
  echo("train.extractor", tc.extractor);
  echo("train.hidden_dim", std::to_string(tc.hidden_dim));
}

void print_summary(const mk_dataset* ds) {
  size_t m = 0;
  int k = 0;
  int d = 0;
  double avg_ins = 0.0;
  double avg_cls = 0.0;
  check(mk_dataset_num_bags(ds, &m));
  check(mk_dataset_num_classes(ds, &k));
  check(mk_dataset_dim(ds, &d));
  check(mk_dataset_avg_instances(ds, &avg_ins));
  check(mk_dataset_avg_candidates(ds, &avg_cls));
  std::cout << "m=" << m << " k=" << k << " d=" << d
            << " avg_ins=" << fmt(avg_ins) << " avg_cls=" << fmt(avg_cls)
            << "\n";
}

// ------------------------------------------------------------------
// commands

void usage_gen() {
  std::cout <<
      "usage: miplkit gen [flags] -o FILE\n"
      "  --k N               classes (synth.num_classes)\n"
      "  --distractors N     negative clusters (synth.num_distractors)\n"
      "  --r N               false positives per bag (synth.false_positives)\n"
      "  --bags-per-class N  (synth.bags_per_class)\n"
      "  --min-instances N / --max-instances N\n"
      "  --min-pos-frac X / --max-pos-frac X\n"
      "  --sep X             cluster separation (synth.cluster_separation)\n"
      "  --dim N             0 = classes + distractors (synth.dim)\n"
      "  --seed N            (synth.seed)\n"
      "  -o, --out FILE      output dataset (gen.out)\n"
      "  --config FILE       key=value config file\n";
}

int cmd_gen(const std::vector<std::string>& args) {
  Resolved r = parse_args("gen", args, usage_gen);
  mk_synth_config sc = read_synth(r);
  std::string out = require(r, "gen.out", "--out");
  echo_synth(sc);
  echo("gen.out", out);

  mk_dataset* raw = nullptr;
  check(mk_dataset_generate(&sc, &raw));
  dataset_ptr ds(raw);
  check(mk_dataset_save(ds.get(), out.c_str()));
  print_summary(ds.get());
  return 0;
}

void usage_bagify() {
  std::cout <<
      "usage: miplkit bagify --dir DIR --labels FILE [flags] -o FILE\n"
      "  --dir DIR           image corpus directory (bagify.dir)\n"
      "  --labels FILE       '<filename> <class>' lines (bagify.labels)\n"
      "  --generator NAME    row|sbn|kmeansseg|sift (baggen.generator)\n"
      "  --r N               false positives per bag (bagify.false_positives)\n"
      "  --k N               classes, 0 = infer (bagify.num_classes)\n"
      "  --cand-seed N       candidate corruption seed (bagify.candidate_seed)\n"
      "  --sbn-blob N / --sbn-stride N (0 = blob)\n"
      "  --kmeans-k N / --kmeans-iters N\n"
      "  --sift-grid-x N / --sift-grid-y N / --sift-patch N\n"
      "  --seed N            generator seed (baggen.seed)\n"
      "  -o, --out FILE      output dataset (bagify.out)\n"
      "  --config FILE       key=value config file\n"
      "per-file failures go to stderr; exits 1 if no bag was produced\n";
}

void print_skip(const char* file, const char* message, void*) {
  std::cerr << "skip " << file << ": " << message << "\n";
}

int cmd_bagify(const std::vector<std::string>& args) {
  Resolved r = parse_args("bagify", args, usage_bagify);
  std::string dir = require(r, "bagify.dir", "--dir");
  std::string labels = require(r, "bagify.labels", "--labels");
  std::string out = require(r, "bagify.out", "--out");
  std::string generator = "row";
  set_string(r, "baggen.generator", generator);

  mk_baggen_config gc;
  mk_baggen_config_init(&gc);
  gc.generator = generator.c_str();
  set_int(r, "baggen.sbn_blob", gc.sbn_blob);
  set_int(r, "baggen.sbn_stride", gc.sbn_stride);
  set_int(r, "baggen.kmeans_k", gc.kmeans_k);
  set_int(r, "baggen.kmeans_iters", gc.kmeans_iters);
  set_int(r, "baggen.sift_grid_x", gc.sift_grid_x);
  set_int(r, "baggen.sift_grid_y", gc.sift_grid_y);
  set_int(r, "baggen.sift_patch", gc.sift_patch);
  set_u64(r, "baggen.seed", gc.seed);

  int false_positives = 1;
  int num_classes = 0;
  uint64_t cand_seed = 1;
  set_int(r, "bagify.false_positives", false_positives);
  set_int(r, "bagify.num_classes", num_classes);
  set_u64(r, "bagify.candidate_seed", cand_seed);
  int threads = env_threads();

  echo("bagify.dir", dir);
  echo("bagify.labels", labels);
  echo("bagify.out", out);
  echo("bagify.false_positives", std::to_string(false_positives));
  echo("bagify.num_classes", std::to_string(num_classes));
  echo("bagify.candidate_seed", std::to_string(cand_seed));
  echo("baggen.generator", generator);
  echo("baggen.sbn_blob", std::to_string(gc.sbn_blob));
  echo("baggen.sbn_stride", std::to_string(gc.sbn_stride));
  echo("baggen.kmeans_k", std::to_string(gc.kmeans_k));
  echo("baggen.kmeans_iters", std::to_string(gc.kmeans_iters));
  echo("baggen.sift_grid_x", std::to_string(gc.sift_grid_x));
  echo("baggen.sift_grid_y", std::to_string(gc.sift_grid_y));
  echo("baggen.sift_patch", std::to_string(gc.sift_patch));
  echo("baggen.seed", std::to_string(gc.seed));
  echo("threads", std::to_string(threads));

  mk_dataset* raw = nullptr;
  check(mk_dataset_from_images(dir.c_str(), &gc, labels.c_str(),
                               false_positives, num_classes, cand_seed,
                               threads, print_skip, nullptr, &raw));
  dataset_ptr ds(raw);
  size_t m = 0;
  check(mk_dataset_num_bags(ds.get(), &m));
  if (m == 0) {
    std::cerr << "error: no bags produced\n";
    return 1;
  }
  check(mk_dataset_save(ds.get(), out.c_str()));
  print_summary(ds.get());
  return 0;
}

void usage_train() {
  std::cout <<
      "usage: miplkit train --data FILE [flags]\n"
      "  --data FILE         training dataset (train.data)\n"
      "  --test FILE         held-out dataset for per-epoch accuracy"
      " (train.test)\n"
      "  --variant NAME      full|no_att|pro|avg|pll_mean|pll_maxmin\n"
      "  --extractor NAME    id|mlp (train.extractor)\n"
      "  --hidden-dim N      mlp feature dim (train.hidden_dim)\n"
      "  --lr-max X / --lr-min X / --momentum X / --weight-decay X\n"
      "  --epochs N / --batch-size N / --att-weight X / --seed N\n"
      "  --model-out FILE    checkpoint path (train.model_out, model.ckpt)\n"
      "  --history-out FILE  per-epoch CSV (train.history_out, history.csv)\n"
      "  --weights-csv FILE  per-epoch candidate weight dump (off)\n"
      "  --config FILE       key=value config file\n";
}

int cmd_train(const std::vector<std::string>& args) {
  Resolved r = parse_args("train", args, usage_train);
  std::string data = require(r, "train.data", "--data");
  std::string test;
  std::string model_out = "model.ckpt";
  std::string history_out = "history.csv";
  std::string weights_csv;
  set_string(r, "train.test", test);
  set_string(r, "train.model_out", model_out);
  set_string(r, "train.history_out", history_out);
  set_string(r, "train.weights_csv", weights_csv);
  std::string variant;
  std::string extractor;
  mk_train_config tc = read_train_cfg(r, variant, extractor);

  echo("train.data", data);
  echo("train.test", test);
  echo("train.model_out", model_out);
  echo("train.history_out", history_out);
  echo("train.weights_csv", weights_csv);
  echo_train_cfg(tc);

  mk_dataset* raw_train = nullptr;
  check(mk_dataset_load(data.c_str(), &raw_train));
  dataset_ptr train_ds(raw_train);
  dataset_ptr test_ds;
  if (!test.empty()) {
    mk_dataset* raw_test = nullptr;
    check(mk_dataset_load(test.c_str(), &raw_test));
    test_ds.reset(raw_test);
  }

  mk_model* raw_model = nullptr;
  mk_history* raw_hist = nullptr;
  check(mk_train(train_ds.get(), test_ds.get(), &tc,
                 weights_csv.empty() ? nullptr : weights_csv.c_str(),
                 &raw_model, &raw_hist));
  model_ptr model(raw_model);
  history_ptr hist(raw_hist);

  check(mk_model_save(model.get(), model_out.c_str()));

  std::ofstream csv(history_out);
  if (!csv) die_usage("cannot open '" + history_out + "' for writing");
  csv << "epoch,lr,loss_total,loss_m,loss_a,train_acc,test_acc\n";
  size_t n = 0;
  check(mk_history_size(hist.get(), &n));
  mk_epoch_stats last{};
  for (size_t i = 0; i < n; ++i) {
    mk_epoch_stats s{};
    check(mk_history_get(hist.get(), i, &s));
    csv << s.epoch << ',' << fmt(s.lr) << ',' << fmt(s.loss_total) << ','
        << fmt(s.loss_m) << ',' << fmt(s.loss_a) << ',' << fmt(s.train_acc)
        << ',';
    if (s.has_test_acc) csv << fmt(s.test_acc);
    csv << '\n';
    last = s;
  }
  csv.close();
  if (!csv) die_usage("error writing '" + history_out + "'");

  std::cout << "model=" << model_out << " history=" << history_out;
  if (n > 0) {
    std::cout << " train_acc=" << fmt(last.train_acc);
    if (last.has_test_acc) std::cout << " test_acc=" << fmt(last.test_acc);
  }
  std::cout << "\n";
  return 0;
}

void usage_eval() {
  std::cout <<
      "usage: miplkit eval --model FILE --data FILE\n"
      "  --model FILE        checkpoint (eval.model)\n"
      "  --data FILE         dataset with ground truth (eval.data)\n"
      "  --config FILE       key=value config file\n"
      "prints accuracy=<fraction>\n";
}

int cmd_eval(const std::vector<std::string>& args) {
  Resolved r = parse_args("eval", args, usage_eval);
  std::string model_path = require(r, "eval.model", "--model");
  std::string data = require(r, "eval.data", "--data");
  echo("eval.model", model_path);
  echo("eval.data", data);

  mk_model* raw_model = nullptr;
  check(mk_model_load(model_path.c_str(), &raw_model));
  model_ptr model(raw_model);
  mk_dataset* raw_ds = nullptr;
  check(mk_dataset_load(data.c_str(), &raw_ds));
  dataset_ptr ds(raw_ds);

  double acc = 0.0;
  check(mk_evaluate(model.get(), ds.get(), &acc));
  std::cout << "accuracy=" << fmt(acc) << "\n";
  return 0;
}

void usage_experiment() {
  std::cout <<
      "usage: miplkit experiment [flags] [-o FILE]\n"
      "  --variants LIST     comma list of variants (experiment.variants)\n"
      "  --r LIST            comma list of false-positive counts"
      " (experiment.r)\n"
      "  --runs N            splits per cell (experiment.runs)\n"
      "  --ratio X           train fraction (experiment.ratio)\n"
      "  --synth-seed N      dataset seed (synth.seed)\n"
      "  --seed N            master seed for split/train seeds (train.seed)\n"
      "  synth flags as in gen; train flags as in train\n"
      "  -o, --out FILE      CSV destination, default stdout"
      " (experiment.out)\n"
      "  --config FILE       key=value config file\n"
      "CSV: variant,r,mean_acc,std_acc,n_runs\n";
}

int cmd_experiment(const std::vector<std::string>& args) {
  Resolved r = parse_args("experiment", args, usage_experiment);
  std::string variants_raw = "full";
  std::string r_raw = "1";
  int runs = 10;
  double ratio = 0.7;
  std::string out;
  set_string(r, "experiment.variants", variants_raw);
  set_string(r, "experiment.r", r_raw);
  set_int(r, "experiment.runs", runs);
  set_double(r, "experiment.ratio", ratio);
  set_string(r, "experiment.out", out);

  mk_synth_config sc = read_synth(r);
  std::string variant;
  std::string extractor;
  mk_train_config tc = read_train_cfg(r, variant, extractor);
  int threads = env_threads();

  std::vector<std::string> variants = split_list(variants_raw, "variant");
  std::vector<int> r_values;
  for (const std::string& item : split_list(r_raw, "r")) {
    int v = 0;
    auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      die_usage("invalid r value '" + item + "'");
    }
    r_values.push_back(v);
  }

  echo("experiment.variants", variants_raw);
  echo("experiment.r", r_raw);
  echo("experiment.runs", std::to_string(runs));
  echo("experiment.ratio", fmt(ratio));
  echo("experiment.out", out);
  echo("threads", std::to_string(threads));
  echo_synth(sc);
  echo_train_cfg(tc);

  std::ofstream file;
  std::ostream& os = open_out(file, out);
  os << "variant,r,mean_acc,std_acc,n_runs\n";
  for (const std::string& v : variants) {
    tc.variant = v.c_str();
    for (int rv : r_values) {
      sc.false_positives = rv;
      mk_dataset* raw = nullptr;
      check(mk_dataset_generate(&sc, &raw));
      dataset_ptr ds(raw);
      double mean = 0.0;
      double stdev = 0.0;
      check(mk_run_experiment(ds.get(), &tc, runs, ratio, threads, &mean,
                              &stdev));
      os << v << ',' << rv << ',' << fmt(mean) << ',' << fmt(stdev) << ','
         << runs << '\n';
    }
  }
  finish_out(file, out);
  return 0;
}

void usage_gradcheck() {
  std::cout <<
      "usage: miplkit gradcheck [flags]\n"
      "  --seed N            (gradcheck.seed)\n"
      "  --configs N         random configurations (gradcheck.configs)\n"
      "  --perturb-bug       corrupt one analytic gradient; the check must"
      " then fail\n"
      "  --config FILE       key=value config file\n"
      "prints max relative error per parameter block; exit 0 iff all pass\n";
}

int cmd_gradcheck(const std::vector<std::string>& args) {
  Resolved r = parse_args("gradcheck", args, usage_gradcheck);
  uint64_t seed = 1;
  int configs = 100;
  int perturb = 0;
  set_u64(r, "gradcheck.seed", seed);
  set_int(r, "gradcheck.configs", configs);
  set_int(r, "gradcheck.perturb_bug", perturb);
  echo("gradcheck.seed", std::to_string(seed));
  echo("gradcheck.configs", std::to_string(configs));
  echo("gradcheck.perturb_bug", std::to_string(perturb));

  mk_gradcheck_report rep;
  check(mk_gradcheck(seed, configs, perturb, &rep));
  for (int i = 0; i < rep.num_blocks; ++i) {
    std::cout << rep.blocks[i].name
              << " max_rel_err=" << fmt(rep.blocks[i].max_rel_err) << "\n";
  }
  std::cout << "configs=" << rep.configs_run
            << " tolerance=" << fmt(rep.tolerance)
            << (rep.passed ? " PASS" : " FAIL") << "\n";
  if (!rep.passed) {
    for (int i = 0; i < rep.num_blocks; ++i) {
      if (rep.blocks[i].max_rel_err >= rep.tolerance) {
        std::cerr << "error: gradient check failed for " << rep.blocks[i].name
                  << " (max_rel_err=" << fmt(rep.blocks[i].max_rel_err)
                  << ")\n";
      }
    }
    return 1;
  }
  return 0;
}

void usage_att_hist() {
  std::cout <<
      "usage: miplkit att-hist --model FILE --data FILE [-o FILE]\n"
      "  --model FILE        checkpoint (atthist.model)\n"
      "  --data FILE         dataset (atthist.data)\n"
      "  --bins N            histogram bins on [0,1] (atthist.bins)\n"
      "  -o, --out FILE      CSV destination, default stdout (atthist.out)\n"
      "  --config FILE       key=value config file\n"
      "CSV: bin_lo,bin_hi,count\n";
}

int cmd_att_hist(const std::vector<std::string>& args) {
  Resolved r = parse_args("att-hist", args, usage_att_hist);
  std::string model_path = require(r, "atthist.model", "--model");
  std::string data = require(r, "atthist.data", "--data");
  int bins = 20;
  std::string out;
  set_int(r, "atthist.bins", bins);
  set_string(r, "atthist.out", out);
  echo("atthist.model", model_path);
  echo("atthist.data", data);
  echo("atthist.bins", std::to_string(bins));
  echo("atthist.out", out);
  if (bins < 1) die_usage("--bins must be >= 1");

  mk_model* raw_model = nullptr;
  check(mk_model_load(model_path.c_str(), &raw_model));
  model_ptr model(raw_model);
  mk_dataset* raw_ds = nullptr;
  check(mk_dataset_load(data.c_str(), &raw_ds));
  dataset_ptr ds(raw_ds);

  std::vector<uint64_t> counts(static_cast<std::size_t>(bins), 0);
  check(mk_attention_histogram(model.get(), ds.get(), bins, counts.data()));

  std::ofstream file;
  std::ostream& os = open_out(file, out);
  os << "bin_lo,bin_hi,count\n";
  for (int i = 0; i < bins; ++i) {
    os << fmt(static_cast<double>(i) / bins) << ','
       << fmt(static_cast<double>(i + 1) / bins) << ',' << counts[i] << '\n';
  }
  finish_out(file, out);
  return 0;
}

void usage_main(std::ostream& os) {
  os << "usage: miplkit <command> [flags]\n"
        "\n"
        "commands:\n"
        "  gen         generate a synthetic dataset\n"
        "  bagify      build a dataset from an image corpus\n"
        "  train       fit a model; writes checkpoint + history CSV\n"
        "  eval        accuracy of a checkpoint on a dataset\n"
        "  experiment  multi-seed split protocol across variants and r\n"
        "  gradcheck   finite-difference gradient check\n"
        "  att-hist    attention score histogram CSV\n"
        "\n"
        "run 'miplkit <command> --help' for flags. Flags override --config\n"
        "file values (dotted keys, e.g. train.lr_max=0.05). MIPLKIT_THREADS\n"
        "caps worker threads (0 = serial, the default).\n";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    usage_main(std::cerr);
    return 2;
  }
  std::string cmd = argv[1];
  if (cmd == "-h" || cmd == "--help" || cmd == "help") {
    usage_main(std::cout);
    return 0;
  }
  if (cmd == "--version") {
    std::cout << mk_version() << "\n";
    return 0;
  }
  std::vector<std::string> args(argv + 2, argv + argc);
  if (cmd == "gen") return cmd_gen(args);
  if (cmd == "bagify") return cmd_bagify(args);
  if (cmd == "train") return cmd_train(args);
  if (cmd == "eval") return cmd_eval(args);
  if (cmd == "experiment") return cmd_experiment(args);
  if (cmd == "gradcheck") return cmd_gradcheck(args);
  if (cmd == "att-hist") return cmd_att_hist(args);
  std::cerr << "error: unknown command '" << cmd << "'\n";
  usage_main(std::cerr);
  return 2;
}
