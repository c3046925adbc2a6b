#ifndef MIPLKIT_BAG_GENERATORS_HPP
#define MIPLKIT_BAG_GENERATORS_HPP

// Image-to-bag feature generators. Each one maps an RGB image to a matrix of
// instances (one instance per row/blob/segment/keypoint):
//   row       -> 9-dim:  row mean RGB + signed mean-RGB diff to the row above
//                        and below (zero on missing sides)
//   sbn       -> 15-dim: mean RGB of a square blob plus its four neighbors
//                        (up, down, left, right); grid positions whose
//                        neighbors fall outside the image are skipped
//   kmeansseg -> 6-dim:  per segment, mean Y/Cb/Cr plus mean |HL|/|LH|/|HH|
//                        of a single-level Haar transform of the luminance
//   sift      -> 128-dim: upright dense SIFT on a keypoint grid
// All generators are pure functions of (image, config).

#include <cstdint>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "image.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace miplkit {

enum class Generator { kRow, kSbn, kKmeansSeg, kSift };

Generator parse_generator(const std::string& name);  // row|sbn|kmeansseg|sift
std::string generator_name(Generator g);

struct BagGenConfig {
  Generator generator = Generator::kRow;
  int sbn_blob = 2;
  int sbn_stride = 0;  // 0 = use blob size
  int kmeans_k = 8;
  int kmeans_iters = 50;
  int sift_grid_x = 2;
  int sift_grid_y = 2;
  int sift_patch = 16;
  std::uint64_t seed = 1;
};

Matrix gen_row(const RgbImage& img);
Matrix gen_sbn(const RgbImage& img, const BagGenConfig& cfg);
Matrix gen_kmeansseg(const RgbImage& img, const BagGenConfig& cfg);
Matrix gen_sift(const RgbImage& img, const BagGenConfig& cfg);

Matrix gen_instances(const RgbImage& img, const BagGenConfig& cfg);
int generator_dim(Generator g);  // 9 / 15 / 6 / 128

// SIFT descriptor finalization, split into its two stages so the clip bound
// (every entry <= 0.2 right after clipping) is observable in tests.
// gen_sift is exactly gen_sift_raw + both stages per descriptor.
Matrix gen_sift_raw(const RgbImage& img, const BagGenConfig& cfg);
void sift_normalize_clip(double* desc, std::size_t len);  // L2 norm, clip 0.2
void sift_renormalize(double* desc, std::size_t len);     // second L2 norm
// an all-zero descriptor passes through both stages untouched

struct BagifyReport {
  struct Item {
    std::string file;
    std::string message;
  };
  std::size_t images_ok = 0;
  std::vector<Item> failures;
};

struct BagifyResult {
  MiplDataset dataset;
  BagifyReport report;
};

// One bag per label-file line, in file order. Label file lines are
// "<filename> <class-int>"; filenames are relative to dir. Per-file problems
// (unreadable image, file in dir without a label entry) go into the report and
// processing continues. num_classes 0 = infer as max label + 1. rng drives the
// candidate corruption (truth + false_positives uniform picks) and is consumed
// in label-file order regardless of threads; threads 0 = serial.
BagifyResult bagify_corpus(const std::string& dir, const BagGenConfig& cfg,
                           const std::string& label_file, int false_positives,
                           int num_classes, Rng& rng, int threads = 0);

}  // namespace miplkit

#endif  // MIPLKIT_BAG_GENERATORS_HPP
