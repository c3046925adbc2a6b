#include "bag_generators.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "errors.hpp"

namespace miplkit {

Generator parse_generator(const std::string& name) {
  if (name == "row") return Generator::kRow;
  if (name == "sbn") return Generator::kSbn;
  if (name == "kmeansseg") return Generator::kKmeansSeg;
  if (name == "sift") return Generator::kSift;
  fail(ErrorCode::kInvalidArgument,
       "unknown generator '" + name + "' (expected row|sbn|kmeansseg|sift)");
}

std::string generator_name(Generator g) {
  switch (g) {
    case Generator::kRow: return "row";
    case Generator::kSbn: return "sbn";
    case Generator::kKmeansSeg: return "kmeansseg";
    case Generator::kSift: return "sift";
  }
  fail(ErrorCode::kInvalidArgument, "bad generator enum value");
}

int generator_dim(Generator g) {
  switch (g) {
    case Generator::kRow: return 9;
    case Generator::kSbn: return 15;
    case Generator::kKmeansSeg: return 6;
    case Generator::kSift: return 128;
  }
  fail(ErrorCode::kInvalidArgument, "bad generator enum value");
}

Matrix gen_row(const RgbImage& img) {
  int w = img.width, h = img.height;
  std::vector<std::array<double, 3>> mean(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) {
    std::array<double, 3> sum{0.0, 0.0, 0.0};
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) sum[static_cast<std::size_t>(c)] += img.at(x, y, c);
    }
    for (int c = 0; c < 3; ++c) {
      mean[static_cast<std::size_t>(y)][static_cast<std::size_t>(c)] =
          sum[static_cast<std::size_t>(c)] / w;
    }
  }
  Matrix out(static_cast<std::size_t>(h), 9);
  for (int y = 0; y < h; ++y) {
    auto row = out.row(static_cast<std::size_t>(y));
    const auto& cur = mean[static_cast<std::size_t>(y)];
    for (int c = 0; c < 3; ++c) {
      auto ci = static_cast<std::size_t>(c);
      row[ci] = cur[ci];
      row[3 + ci] = y > 0 ? cur[ci] - mean[static_cast<std::size_t>(y - 1)][ci] : 0.0;
      row[6 + ci] = y < h - 1 ? cur[ci] - mean[static_cast<std::size_t>(y + 1)][ci] : 0.0;
    }
  }
  return out;
}

namespace {

void blob_mean(const RgbImage& img, int x0, int y0, int b, double* out) {
  double sum[3] = {0.0, 0.0, 0.0};
  for (int y = y0; y < y0 + b; ++y) {
    for (int x = x0; x < x0 + b; ++x) {
      for (int c = 0; c < 3; ++c) sum[c] += img.at(x, y, c);
    }
  }
  double inv = 1.0 / (static_cast<double>(b) * b);
  for (int c = 0; c < 3; ++c) out[c] = sum[c] * inv;
}

}  // namespace

Matrix gen_sbn(const RgbImage& img, const BagGenConfig& cfg) {
  int b = cfg.sbn_blob;
  if (b < 1) fail(ErrorCode::kInvalidArgument, "sbn blob size must be >= 1");
  if (cfg.sbn_stride < 0) {
    fail(ErrorCode::kInvalidArgument, "sbn stride must be >= 1 (or 0 = blob size)");
  }
  int stride = cfg.sbn_stride > 0 ? cfg.sbn_stride : b;
  int w = img.width, h = img.height;

  // keep grid positions whose four neighboring blobs stay in bounds
  std::vector<std::pair<int, int>> pos;
  for (int y = 0; y + b <= h; y += stride) {
    if (y < b || y + 2 * b > h) continue;
    for (int x = 0; x + b <= w; x += stride) {
      if (x < b || x + 2 * b > w) continue;
      pos.emplace_back(x, y);
    }
  }
  if (pos.empty()) {
    fail(ErrorCode::kInvalidArgument,
         "image " + std::to_string(w) + "x" + std::to_string(h) +
             " too small for sbn blob " + std::to_string(b));
  }

  Matrix out(pos.size(), 15);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    auto [x, y] = pos[i];
    auto row = out.row(i);
    blob_mean(img, x, y, b, row.data());          // center
    blob_mean(img, x, y - b, b, row.data() + 3);  // up
    blob_mean(img, x, y + b, b, row.data() + 6);  // down
    blob_mean(img, x - b, y, b, row.data() + 9);  // left
    blob_mean(img, x + b, y, b, row.data() + 12); // right
  }
  return out;
}

namespace {

double dist2_5(const std::array<double, 5>& a, const std::array<double, 5>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

Matrix gen_kmeansseg(const RgbImage& img, const BagGenConfig& cfg) {
  int w = img.width, h = img.height;
  std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  int K = cfg.kmeans_k;
  if (K < 1) fail(ErrorCode::kInvalidArgument, "kmeans_k must be >= 1");
  if (static_cast<std::size_t>(K) > n) {
    fail(ErrorCode::kInvalidArgument,
         "kmeans_k " + std::to_string(K) + " exceeds pixel count " +
             std::to_string(n));
  }
  if (cfg.kmeans_iters < 1) {
    fail(ErrorCode::kInvalidArgument, "kmeans_iters must be >= 1");
  }

  // clustering space: normalized YCbCr plus normalized coordinates
  std::vector<std::array<double, 5>> pts(n);
  std::vector<double> ych(n), cbch(n), crch(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                      static_cast<std::size_t>(x);
      ycbcr601(img, x, y, ych[i], cbch[i], crch[i]);
      pts[i] = {ych[i] / 255.0, cbch[i] / 255.0, crch[i] / 255.0,
                w > 1 ? static_cast<double>(x) / (w - 1) : 0.0,
                h > 1 ? static_cast<double>(y) / (h - 1) : 0.0};
    }
  }

  // single-level Haar details of the luminance; each pixel inherits the
  // coefficients of its 2x2 block, pixels outside any block keep zeros
  std::vector<double> hl(n, 0.0), lh(n, 0.0), hh(n, 0.0);
  for (int by = 0; by + 1 < h; by += 2) {
    for (int bx = 0; bx + 1 < w; bx += 2) {
      std::size_t i00 = static_cast<std::size_t>(by) * w + bx;
      std::size_t i10 = i00 + 1;
      std::size_t i01 = i00 + static_cast<std::size_t>(w);
      std::size_t i11 = i01 + 1;
      double a = ych[i00], b2 = ych[i10], c = ych[i01], d = ych[i11];
      double vhl = std::fabs((a - b2 + c - d) / 4.0);
      double vlh = std::fabs((a + b2 - c - d) / 4.0);
      double vhh = std::fabs((a - b2 - c + d) / 4.0);
      for (std::size_t i : {i00, i10, i01, i11}) {
        hl[i] = vhl;
        lh[i] = vlh;
        hh[i] = vhh;
      }
    }
  }

  // k-means++ seeding
  Rng rng(cfg.seed);
  std::vector<std::array<double, 5>> centers;
  centers.reserve(static_cast<std::size_t>(K));
  centers.push_back(pts[rng.next_below(n)]);
  std::vector<double> best(n);
  for (std::size_t i = 0; i < n; ++i) best[i] = dist2_5(pts[i], centers[0]);
  while (centers.size() < static_cast<std::size_t>(K)) {
    double total = std::accumulate(best.begin(), best.end(), 0.0);
    std::size_t pick;
    if (total > 0.0) {
      double u = rng.next_uniform() * total;
      double cum = 0.0;
      pick = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (best[i] <= 0.0) continue;
        pick = i;
        cum += best[i];
        if (cum >= u) break;
      }
    } else {
      pick = rng.next_below(n);
    }
    centers.push_back(pts[pick]);
    for (std::size_t i = 0; i < n; ++i) {
      best[i] = std::min(best[i], dist2_5(pts[i], centers.back()));
    }
  }

  // Lloyd iterations; ties go to the lowest center index
  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < cfg.kmeans_iters; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int bc = 0;
      double bd = dist2_5(pts[i], centers[0]);
      for (int c = 1; c < K; ++c) {
        double dd = dist2_5(pts[i], centers[static_cast<std::size_t>(c)]);
        if (dd < bd) {
          bd = dd;
          bc = c;
        }
      }
      if (assign[i] != bc) {
        assign[i] = bc;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<std::array<double, 5>> sums(
        static_cast<std::size_t>(K), {0.0, 0.0, 0.0, 0.0, 0.0});
    std::vector<std::size_t> counts(static_cast<std::size_t>(K), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto c = static_cast<std::size_t>(assign[i]);
      for (std::size_t f = 0; f < 5; ++f) sums[c][f] += pts[i][f];
      ++counts[c];
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(K); ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its center
      for (std::size_t f = 0; f < 5; ++f) {
        centers[c][f] = sums[c][f] / static_cast<double>(counts[c]);
      }
    }
  }

  // per non-empty segment: mean raw Y/Cb/Cr + mean Haar detail magnitudes
  std::vector<std::array<double, 6>> feat(static_cast<std::size_t>(K),
                                          {0.0, 0.0, 0.0, 0.0, 0.0, 0.0});
  std::vector<std::size_t> counts(static_cast<std::size_t>(K), 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto c = static_cast<std::size_t>(assign[i]);
    feat[c][0] += ych[i];
    feat[c][1] += cbch[i];
    feat[c][2] += crch[i];
    feat[c][3] += hl[i];
    feat[c][4] += lh[i];
    feat[c][5] += hh[i];
    ++counts[c];
  }
  std::size_t kept = 0;
  for (std::size_t c = 0; c < static_cast<std::size_t>(K); ++c) {
    if (counts[c] > 0) ++kept;
  }
  Matrix out(kept, 6);
  std::size_t r = 0;
  for (std::size_t c = 0; c < static_cast<std::size_t>(K); ++c) {
    if (counts[c] == 0) continue;
    auto row = out.row(r++);
    for (std::size_t f = 0; f < 6; ++f) {
      row[f] = feat[c][f] / static_cast<double>(counts[c]);
    }
  }
  return out;
}

void sift_normalize_clip(double* desc, std::size_t len) {
  double norm2 = 0.0;
  for (std::size_t i = 0; i < len; ++i) norm2 += desc[i] * desc[i];
  if (norm2 <= 0.0) return;  // all-zero descriptor stays zero
  double inv = 1.0 / std::sqrt(norm2);
  for (std::size_t i = 0; i < len; ++i) {
    desc[i] *= inv;
    if (desc[i] > 0.2) desc[i] = 0.2;
  }
}

void sift_renormalize(double* desc, std::size_t len) {
  double norm2 = 0.0;
  for (std::size_t i = 0; i < len; ++i) norm2 += desc[i] * desc[i];
  if (norm2 <= 0.0) return;
  double inv = 1.0 / std::sqrt(norm2);
  for (std::size_t i = 0; i < len; ++i) desc[i] *= inv;
}

namespace {

// evenly spread patch origins so every patch stays inside the span
std::vector<int> grid_origins(int count, int span, int patch) {
  std::vector<int> pos(static_cast<std::size_t>(count));
  if (count == 1) {
    pos[0] = (span - patch) / 2;
  } else {
    double step = static_cast<double>(span - patch) / (count - 1);
    for (int i = 0; i < count; ++i) {
      pos[static_cast<std::size_t>(i)] = static_cast<int>(std::llround(i * step));
    }
  }
  return pos;
}

}  // namespace

Matrix gen_sift_raw(const RgbImage& img, const BagGenConfig& cfg) {
  int P = cfg.sift_patch;
  int gx = cfg.sift_grid_x, gy = cfg.sift_grid_y;
  if (P < 4) fail(ErrorCode::kInvalidArgument, "sift patch must be >= 4");
  if (gx < 1 || gy < 1) {
    fail(ErrorCode::kInvalidArgument, "sift grid must be >= 1 in both axes");
  }
  int w = img.width, h = img.height;
  if (P > w || P > h) {
    fail(ErrorCode::kInvalidArgument,
         "sift patch " + std::to_string(P) + " exceeds image " +
             std::to_string(w) + "x" + std::to_string(h));
  }

  std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::vector<double> lum(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      lum[static_cast<std::size_t>(y) * w + x] = luma601(img, x, y);
    }
  }
  // central differences with index clamp at the borders
  auto at = [&](int x, int y) { return lum[static_cast<std::size_t>(y) * w + x]; };
  std::vector<double> dx(n), dy(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::size_t i = static_cast<std::size_t>(y) * w + x;
      dx[i] = 0.5 * (at(std::min(x + 1, w - 1), y) - at(std::max(x - 1, 0), y));
      dy[i] = 0.5 * (at(x, std::min(y + 1, h - 1)) - at(x, std::max(y - 1, 0)));
    }
  }

  std::vector<int> xs = grid_origins(gx, w, P);
  std::vector<int> ys = grid_origins(gy, h, P);
  double sigma = P / 2.0;
  double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
  const double pi = 3.14159265358979323846;

  Matrix out(static_cast<std::size_t>(gx) * static_cast<std::size_t>(gy), 128);
  std::size_t row_idx = 0;
  for (int ty : ys) {
    for (int tx : xs) {
      auto desc = out.row(row_idx++);
      double cx = tx + (P - 1) / 2.0;
      double cy = ty + (P - 1) / 2.0;
      for (int v = 0; v < P; ++v) {
        for (int u = 0; u < P; ++u) {
          int x = tx + u, y = ty + v;
          std::size_t i = static_cast<std::size_t>(y) * w + x;
          double m = std::sqrt(dx[i] * dx[i] + dy[i] * dy[i]);
          if (m == 0.0) continue;
          double theta = std::atan2(dy[i], dx[i]);
          int bin = static_cast<int>((theta + pi) / (pi / 4.0)) & 7;
          int cellx = std::min(3, (4 * u) / P);
          int celly = std::min(3, (4 * v) / P);
          double ddx = x - cx, ddy = y - cy;
          double wgt = std::exp(-(ddx * ddx + ddy * ddy) * inv_two_sigma2);
          desc[static_cast<std::size_t>((celly * 4 + cellx) * 8 + bin)] += wgt * m;
        }
      }
    }
  }
  return out;
}

Matrix gen_sift(const RgbImage& img, const BagGenConfig& cfg) {
  Matrix out = gen_sift_raw(img, cfg);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    sift_normalize_clip(row.data(), row.size());
    sift_renormalize(row.data(), row.size());
  }
  return out;
}

Matrix gen_instances(const RgbImage& img, const BagGenConfig& cfg) {
  switch (cfg.generator) {
    case Generator::kRow: return gen_row(img);
    case Generator::kSbn: return gen_sbn(img, cfg);
    case Generator::kKmeansSeg: return gen_kmeansseg(img, cfg);
    case Generator::kSift: return gen_sift(img, cfg);
  }
  fail(ErrorCode::kInvalidArgument, "bad generator enum value");
}

BagifyResult bagify_corpus(const std::string& dir, const BagGenConfig& cfg,
                           const std::string& label_file, int false_positives,
                           int num_classes, Rng& rng, int threads) {
  namespace fs = std::filesystem;

  std::ifstream in(label_file);
  if (!in) fail(ErrorCode::kIo, "cannot open " + label_file);
  struct Entry {
    std::string file;
    int label;
  };
  std::vector<Entry> entries;
  std::unordered_set<std::string> labeled;
  std::string line;
  std::size_t line_no = 0;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string fname, extra;
    long label = 0;
    if (!(ls >> fname >> label) || (ls >> extra)) {
      fail(ErrorCode::kParse, label_file + ":" + std::to_string(line_no) +
                                  ": expected \"<filename> <class-int>\"");
    }
    if (label < 0) {
      fail(ErrorCode::kParse, label_file + ":" + std::to_string(line_no) +
                                  ": negative class label");
    }
    if (!labeled.insert(fname).second) {
      fail(ErrorCode::kParse, label_file + ":" + std::to_string(line_no) +
                                  ": duplicate entry for " + fname);
    }
    entries.push_back({fname, static_cast<int>(label)});
    max_label = std::max(max_label, static_cast<int>(label));
  }

  int k = num_classes > 0 ? num_classes : max_label + 1;
  if (k < 1) k = 1;
  if (!entries.empty()) {
    if (max_label >= k) {
      fail(ErrorCode::kInvalidArgument,
           label_file + ": class " + std::to_string(max_label) +
               " outside 0.." + std::to_string(k - 1));
    }
    if (false_positives < 1) {
      fail(ErrorCode::kInvalidArgument, "r must be >= 1");
    }
    if (false_positives >= k) {
      fail(ErrorCode::kInvalidArgument,
           "r must be < k (got r=" + std::to_string(false_positives) +
               ", k=" + std::to_string(k) + ")");
    }
  }

  struct Job {
    Matrix instances;
    std::string error;
  };
  std::vector<Job> jobs(entries.size());
  auto work = [&](std::size_t i) {
    try {
      RgbImage img = load_image(dir + "/" + entries[i].file);
      jobs[i].instances = gen_instances(img, cfg);
    } catch (const std::exception& e) {
      jobs[i].error = e.what();
    }
  };
  std::size_t workers = threads <= 0 ? 1 : static_cast<std::size_t>(threads);
  workers = std::min(workers, entries.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < entries.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= entries.size()) return;
          work(i);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  BagifyResult res;
  res.dataset.num_classes = k;
  res.dataset.dim = generator_dim(cfg.generator);
  // rng is consumed only for successful images, in label-file order, so the
  // candidate sets do not depend on the thread count
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!jobs[i].error.empty()) {
      res.report.failures.push_back({entries[i].file, jobs[i].error});
      continue;
    }
    Bag bag;
    bag.instances = std::move(jobs[i].instances);
    bag.truth = entries[i].label;
    bag.candidates = corrupt_candidates(bag.truth, k, false_positives, rng);
    res.dataset.bags.push_back(std::move(bag));
  }
  res.report.images_ok = res.dataset.bags.size();

  std::error_code ec;
  fs::directory_iterator it(dir, ec);
  if (ec) {
    fail(ErrorCode::kIo, "cannot read directory " + dir + ": " + ec.message());
  }
  std::vector<std::string> unlabeled;
  for (const auto& de : it) {
    std::error_code fec;
    if (!de.is_regular_file(fec) || fec) continue;
    std::string name = de.path().filename().string();
    if (labeled.count(name)) continue;
    std::error_code eq;
    if (fs::equivalent(de.path(), fs::path(label_file), eq)) continue;
    unlabeled.push_back(name);
  }
  std::sort(unlabeled.begin(), unlabeled.end());
  for (std::string& name : unlabeled) {
    res.report.failures.push_back({std::move(name), "no label entry"});
  }
  return res;
}

}  // namespace miplkit
