// C API: thin handle/status wrappers over the C++ core.

#include "miplkit/miplkit.h"

#include <cstring>
#include <exception>
#include <fstream>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include "bag_generators.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "gradcheck.hpp"
#include "model.hpp"
#include "numeric.hpp"
#include "rng.hpp"
#include "trainer.hpp"

struct mk_dataset {
  miplkit::MiplDataset ds;
};

struct mk_model {
  miplkit::ModelParams params;
};

struct mk_history {
  std::vector<miplkit::EpochStats> epochs;
};

namespace {

thread_local std::string g_last_error;

mk_status status_of(miplkit::ErrorCode code) {
  switch (code) {
    case miplkit::ErrorCode::kInvalidArgument:
      return MK_ERR_INVALID_ARGUMENT;
    case miplkit::ErrorCode::kIo:
      return MK_ERR_IO;
    case miplkit::ErrorCode::kParse:
      return MK_ERR_PARSE;
    case miplkit::ErrorCode::kNumeric:
      return MK_ERR_NUMERIC;
  }
  return MK_ERR_INTERNAL;
}

template <typename Fn>
mk_status guard(Fn&& fn) {
  try {
    fn();
    return MK_OK;
  } catch (const miplkit::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MK_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MK_ERR_INTERNAL;
  }
}

mk_status arg_error(const char* message) {
  g_last_error = message;
  return MK_ERR_INVALID_ARGUMENT;
}

miplkit::SynthConfig to_synth(const mk_synth_config& c) {
  miplkit::SynthConfig s;
  s.num_classes = c.num_classes;
  s.num_distractors = c.num_distractors;
  s.false_positives = c.false_positives;
  s.bags_per_class = c.bags_per_class;
  s.min_instances = c.min_instances;
  s.max_instances = c.max_instances;
  s.min_positive_fraction = c.min_positive_fraction;
  s.max_positive_fraction = c.max_positive_fraction;
  s.cluster_separation = c.cluster_separation;
  s.dim = c.dim;
  s.seed = c.seed;
  return s;
}

miplkit::BagGenConfig to_baggen(const mk_baggen_config& c) {
  if (c.generator == nullptr) {
    miplkit::fail(miplkit::ErrorCode::kInvalidArgument, "generator is null");
  }
  miplkit::BagGenConfig g;
  g.generator = miplkit::parse_generator(c.generator);
  g.sbn_blob = c.sbn_blob;
  g.sbn_stride = c.sbn_stride;
  g.kmeans_k = c.kmeans_k;
  g.kmeans_iters = c.kmeans_iters;
  g.sift_grid_x = c.sift_grid_x;
  g.sift_grid_y = c.sift_grid_y;
  g.sift_patch = c.sift_patch;
  g.seed = c.seed;
  return g;
}

miplkit::TrainConfig to_train(const mk_train_config& c) {
  if (c.variant == nullptr || c.extractor == nullptr) {
    miplkit::fail(miplkit::ErrorCode::kInvalidArgument,
                  "variant/extractor is null");
  }
  miplkit::TrainConfig t;
  t.lr_max = c.lr_max;
  t.lr_min = c.lr_min;
  t.momentum = c.momentum;
  t.weight_decay = c.weight_decay;
  t.epochs = c.epochs;
  t.batch_size = c.batch_size;
  t.attention_loss_weight = c.attention_loss_weight;
  t.seed = c.seed;
  t.variant = miplkit::parse_variant(c.variant);
  std::string ex = c.extractor;
  if (ex == "id") {
    t.extractor = miplkit::Extractor::kIdentity;
  } else if (ex == "mlp") {
    t.extractor = miplkit::Extractor::kMlp;
  } else {
    miplkit::fail(miplkit::ErrorCode::kInvalidArgument,
                  "unknown extractor '" + ex + "' (expected id|mlp)");
  }
  t.hidden_dim = c.hidden_dim;
  return t;
}

void write_float(std::ostream& os, double v) {
  os << miplkit::format_double(v);
}

}  // namespace

extern "C" {

const char* mk_version(void) { return "0.1.0"; }

const char* mk_last_error(void) { return g_last_error.c_str(); }

void mk_synth_config_init(mk_synth_config* cfg) {
  if (cfg == nullptr) return;
  miplkit::SynthConfig d;
  cfg->num_classes = d.num_classes;
  cfg->num_distractors = d.num_distractors;
  cfg->false_positives = d.false_positives;
  cfg->bags_per_class = d.bags_per_class;
  cfg->min_instances = d.min_instances;
  cfg->max_instances = d.max_instances;
  cfg->min_positive_fraction = d.min_positive_fraction;
  cfg->max_positive_fraction = d.max_positive_fraction;
  cfg->cluster_separation = d.cluster_separation;
  cfg->dim = d.dim;
  cfg->seed = d.seed;
}

mk_status mk_dataset_generate(const mk_synth_config* cfg, mk_dataset** out) {
  if (cfg == nullptr || out == nullptr) return arg_error("null argument");
  return guard([&] {
    auto handle = new mk_dataset{miplkit::gen_synthetic(to_synth(*cfg))};
    *out = handle;
  });
}

mk_status mk_dataset_load(const char* path, mk_dataset** out) {
  if (path == nullptr || out == nullptr) return arg_error("null argument");
  return guard(
      [&] { *out = new mk_dataset{miplkit::load(std::string(path))}; });
}

mk_status mk_dataset_save(const mk_dataset* ds, const char* path) {
  if (ds == nullptr || path == nullptr) return arg_error("null argument");
  return guard([&] { miplkit::save(ds->ds, std::string(path)); });
}

void mk_dataset_free(mk_dataset* ds) { delete ds; }

mk_status mk_dataset_num_bags(const mk_dataset* ds, size_t* out) {
  if (ds == nullptr || out == nullptr) return arg_error("null argument");
  *out = ds->ds.bags.size();
  return MK_OK;
}

mk_status mk_dataset_num_classes(const mk_dataset* ds, int* out) {
  if (ds == nullptr || out == nullptr) return arg_error("null argument");
  *out = ds->ds.num_classes;
  return MK_OK;
}

mk_status mk_dataset_dim(const mk_dataset* ds, int* out) {
  if (ds == nullptr || out == nullptr) return arg_error("null argument");
  *out = ds->ds.dim;
  return MK_OK;
}

mk_status mk_dataset_avg_instances(const mk_dataset* ds, double* out) {
  if (ds == nullptr || out == nullptr) return arg_error("null argument");
  return guard([&] { *out = ds->ds.avg_instances(); });
}

mk_status mk_dataset_avg_candidates(const mk_dataset* ds, double* out) {
  if (ds == nullptr || out == nullptr) return arg_error("null argument");
  return guard([&] { *out = ds->ds.avg_candidates(); });
}

mk_status mk_dataset_split(const mk_dataset* ds, double train_ratio,
                           uint64_t seed, mk_dataset** train,
                           mk_dataset** test) {
  if (ds == nullptr || train == nullptr || test == nullptr) {
    return arg_error("null argument");
  }
  return guard([&] {
    miplkit::Rng rng(seed);
    auto [tr, te] = miplkit::split(ds->ds, train_ratio, rng);
    *train = new mk_dataset{std::move(tr)};
    *test = new mk_dataset{std::move(te)};
  });
}

void mk_baggen_config_init(mk_baggen_config* cfg) {
  if (cfg == nullptr) return;
  miplkit::BagGenConfig d;
  cfg->generator = "row";
  cfg->sbn_blob = d.sbn_blob;
  cfg->sbn_stride = d.sbn_stride;
  cfg->kmeans_k = d.kmeans_k;
  cfg->kmeans_iters = d.kmeans_iters;
  cfg->sift_grid_x = d.sift_grid_x;
  cfg->sift_grid_y = d.sift_grid_y;
  cfg->sift_patch = d.sift_patch;
  cfg->seed = d.seed;
}

mk_status mk_dataset_from_images(const char* dir, const mk_baggen_config* cfg,
                                 const char* label_file, int false_positives,
                                 int num_classes, uint64_t candidate_seed,
                                 int threads, mk_file_error_fn on_error,
                                 void* user_data, mk_dataset** out) {
  if (dir == nullptr || cfg == nullptr || label_file == nullptr ||
      out == nullptr) {
    return arg_error("null argument");
  }
  return guard([&] {
    miplkit::Rng rng(candidate_seed);
    miplkit::BagifyResult res =
        miplkit::bagify_corpus(dir, to_baggen(*cfg), label_file,
                               false_positives, num_classes, rng, threads);
    if (on_error != nullptr) {
      for (const auto& f : res.report.failures) {
        on_error(f.file.c_str(), f.message.c_str(), user_data);
      }
    }
    *out = new mk_dataset{std::move(res.dataset)};
  });
}

void mk_train_config_init(mk_train_config* cfg) {
  if (cfg == nullptr) return;
  miplkit::TrainConfig d;
  cfg->lr_max = d.lr_max;
  cfg->lr_min = d.lr_min;
  cfg->momentum = d.momentum;
  cfg->weight_decay = d.weight_decay;
  cfg->epochs = d.epochs;
  cfg->batch_size = d.batch_size;
  cfg->attention_loss_weight = d.attention_loss_weight;
  cfg->seed = d.seed;
  cfg->variant = "full";
  cfg->extractor = "id";
  cfg->hidden_dim = d.hidden_dim;
}

mk_status mk_train(const mk_dataset* train, const mk_dataset* test,
                   const mk_train_config* cfg, const char* weights_csv,
                   mk_model** out_model, mk_history** out_history) {
  if (train == nullptr || cfg == nullptr) return arg_error("null argument");
  return guard([&] {
    miplkit::TrainConfig tc = to_train(*cfg);

    std::ofstream wout;
    miplkit::TrainHooks hooks;
    if (weights_csv != nullptr) {
      wout.open(weights_csv);
      if (!wout) {
        miplkit::fail(miplkit::ErrorCode::kIo,
                      std::string("cannot open '") + weights_csv +
                          "' for writing");
      }
      wout << "epoch,bag_id,class,weight\n";
      hooks.on_weights = [&wout](int epoch, const miplkit::Matrix& w) {
        // called after init (epoch 0) and after each batch; only the
        // epoch-0 snapshot is dumped here, per-epoch finals come below
        if (epoch != 0) return;
        for (std::size_t i = 0; i < w.rows(); ++i) {
          for (std::size_t c = 0; c < w.cols(); ++c) {
            double v = w.at(i, c);
            if (v == 0.0) continue;
            wout << "0," << i << ',' << c << ',';
            write_float(wout, v);
            wout << '\n';
          }
        }
      };
    }

    // stash the latest table so each epoch's final state can be dumped
    miplkit::Matrix latest;
    if (weights_csv != nullptr) {
      auto epoch0 = hooks.on_weights;
      hooks.on_weights = [&latest, epoch0](int epoch,
                                           const miplkit::Matrix& w) {
        epoch0(epoch, w);
        latest = w;
      };
      hooks.on_epoch = [&wout, &latest](const miplkit::EpochStats& s) {
        for (std::size_t i = 0; i < latest.rows(); ++i) {
          for (std::size_t c = 0; c < latest.cols(); ++c) {
            double v = latest.at(i, c);
            if (v == 0.0) continue;
            wout << s.epoch << ',' << i << ',' << c << ',';
            write_float(wout, v);
            wout << '\n';
          }
        }
      };
    }

    miplkit::TrainResult res = miplkit::train(
        train->ds, test != nullptr ? &test->ds : nullptr, tc, hooks);

    if (weights_csv != nullptr && !wout) {
      miplkit::fail(miplkit::ErrorCode::kIo,
                    std::string("error writing '") + weights_csv + "'");
    }

    if (out_model != nullptr) {
      *out_model = new mk_model{std::move(res.model)};
    }
    if (out_history != nullptr) {
      *out_history = new mk_history{std::move(res.history)};
    }
  });
}

mk_status mk_history_size(const mk_history* h, size_t* out) {
  if (h == nullptr || out == nullptr) return arg_error("null argument");
  *out = h->epochs.size();
  return MK_OK;
}

mk_status mk_history_get(const mk_history* h, size_t index,
                         mk_epoch_stats* out) {
  if (h == nullptr || out == nullptr) return arg_error("null argument");
  if (index >= h->epochs.size()) return arg_error("history index out of range");
  const miplkit::EpochStats& s = h->epochs[index];
  out->epoch = s.epoch;
  out->lr = s.lr;
  out->loss_total = s.loss_total;
  out->loss_m = s.loss_m;
  out->loss_a = s.loss_a;
  out->train_acc = s.train_acc;
  out->test_acc = s.test_acc;
  out->has_test_acc = s.has_test_acc ? 1 : 0;
  return MK_OK;
}

void mk_history_free(mk_history* h) { delete h; }

mk_status mk_model_save(const mk_model* m, const char* path) {
  if (m == nullptr || path == nullptr) return arg_error("null argument");
  return guard([&] { miplkit::save_model(m->params, std::string(path)); });
}

mk_status mk_model_load(const char* path, mk_model** out) {
  if (path == nullptr || out == nullptr) return arg_error("null argument");
  return guard(
      [&] { *out = new mk_model{miplkit::load_model(std::string(path))}; });
}

void mk_model_free(mk_model* m) { delete m; }

mk_status mk_evaluate(const mk_model* m, const mk_dataset* ds,
                      double* accuracy) {
  if (m == nullptr || ds == nullptr || accuracy == nullptr) {
    return arg_error("null argument");
  }
  return guard([&] { *accuracy = miplkit::evaluate(m->params, ds->ds); });
}

mk_status mk_predict(const mk_model* m, const mk_dataset* ds, size_t bag_index,
                     int* label) {
  if (m == nullptr || ds == nullptr || label == nullptr) {
    return arg_error("null argument");
  }
  return guard([&] {
    if (bag_index >= ds->ds.bags.size()) {
      miplkit::fail(miplkit::ErrorCode::kInvalidArgument,
                    "bag index out of range");
    }
    *label = miplkit::predict(m->params, ds->ds.bags[bag_index]);
  });
}

mk_status mk_attention_histogram(const mk_model* m, const mk_dataset* ds,
                                 int bins, uint64_t* counts) {
  if (m == nullptr || ds == nullptr || counts == nullptr) {
    return arg_error("null argument");
  }
  return guard([&] {
    std::vector<std::size_t> h =
        miplkit::attention_histogram(m->params, ds->ds, bins);
    for (std::size_t i = 0; i < h.size(); ++i) {
      counts[i] = static_cast<uint64_t>(h[i]);
    }
  });
}

mk_status mk_run_experiment(const mk_dataset* ds, const mk_train_config* cfg,
                            int n_runs, double train_ratio, int threads,
                            double* mean_acc, double* std_acc) {
  if (ds == nullptr || cfg == nullptr || mean_acc == nullptr ||
      std_acc == nullptr) {
    return arg_error("null argument");
  }
  return guard([&] {
    miplkit::ExperimentResult res = miplkit::run_experiment(
        ds->ds, to_train(*cfg), n_runs, train_ratio, threads);
    *mean_acc = res.mean_acc;
    *std_acc = res.std_acc;
  });
}

mk_status mk_gradcheck(uint64_t seed, int num_configs, int inject_fault,
                       mk_gradcheck_report* out) {
  if (out == nullptr) return arg_error("null argument");
  return guard([&] {
    miplkit::GradcheckReport rep =
        miplkit::run_gradcheck(seed, num_configs, inject_fault != 0);
    std::memset(out, 0, sizeof(*out));
    int n = 0;
    for (const auto& b : rep.blocks) {
      if (n >= MK_GRADCHECK_MAX_BLOCKS) break;
      std::strncpy(out->blocks[n].name, b.name.c_str(),
                   sizeof(out->blocks[n].name) - 1);
      out->blocks[n].max_rel_err = b.max_rel_err;
      ++n;
    }
    out->num_blocks = n;
    out->tolerance = rep.tolerance;
    out->configs_run = rep.configs_run;
    out->passed = rep.passed ? 1 : 0;
  });
}

}  // extern "C"
