#include "model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "errors.hpp"
#include "numeric.hpp"

namespace miplkit {

ModelParams init_params(int input_dim, int feature_dim, int num_classes,
                        Extractor extractor, BagReduction reduction, Rng& rng) {
  if (input_dim < 1) fail(ErrorCode::kInvalidArgument, "init_params: input_dim must be >= 1");
  if (num_classes < 2) {
    fail(ErrorCode::kInvalidArgument, "init_params: need at least 2 classes");
  }
  if (extractor == Extractor::kIdentity) {
    feature_dim = input_dim;
  } else if (feature_dim < 1) {
    fail(ErrorCode::kInvalidArgument, "init_params: feature_dim must be >= 1");
  }

  ModelParams p;
  p.extractor = extractor;
  p.reduction = reduction;
  p.input_dim = input_dim;
  p.feature_dim = feature_dim;
  p.num_classes = num_classes;

  auto d = static_cast<std::size_t>(input_dim);
  auto dp = static_cast<std::size_t>(feature_dim);
  auto k = static_cast<std::size_t>(num_classes);

  auto draw = [&rng](std::span<double> out, double bound) {
    for (double& v : out) v = (2.0 * rng.next_uniform() - 1.0) * bound;
  };
  auto span_of = [](Vec& v) { return std::span<double>(v); };

  if (extractor == Extractor::kMlp) {
    p.hidden_weight = Matrix(dp, d);
    p.hidden_bias.resize(dp);
    double b = 1.0 / std::sqrt(static_cast<double>(d));
    draw({p.hidden_weight.data(), p.hidden_weight.size()}, b);
    draw(span_of(p.hidden_bias), b);
  }

  double ba = 1.0 / std::sqrt(static_cast<double>(dp));
  p.attn_content_weight = Matrix(k, dp);
  p.attn_gate_weight = Matrix(k, dp);
  p.attn_content_bias.resize(k);
  p.attn_gate_bias.resize(k);
  p.attn_combine.resize(k);
  draw({p.attn_content_weight.data(), p.attn_content_weight.size()}, ba);
  draw({p.attn_gate_weight.data(), p.attn_gate_weight.size()}, ba);
  draw(span_of(p.attn_content_bias), ba);
  draw(span_of(p.attn_gate_bias), ba);
  draw(span_of(p.attn_combine), 1.0 / std::sqrt(static_cast<double>(k)));

  p.class_weight = Matrix(k, dp);
  p.class_bias.resize(k);
  draw({p.class_weight.data(), p.class_weight.size()}, ba);
  draw(span_of(p.class_bias), ba);
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z;
  z.extractor = p.extractor;
  z.reduction = p.reduction;
  z.input_dim = p.input_dim;
  z.feature_dim = p.feature_dim;
  z.num_classes = p.num_classes;
  z.hidden_weight = Matrix(p.hidden_weight.rows(), p.hidden_weight.cols());
  z.hidden_bias.assign(p.hidden_bias.size(), 0.0);
  z.attn_content_weight =
      Matrix(p.attn_content_weight.rows(), p.attn_content_weight.cols());
  z.attn_gate_weight = Matrix(p.attn_gate_weight.rows(), p.attn_gate_weight.cols());
  z.attn_content_bias.assign(p.attn_content_bias.size(), 0.0);
  z.attn_gate_bias.assign(p.attn_gate_bias.size(), 0.0);
  z.attn_combine.assign(p.attn_combine.size(), 0.0);
  z.class_weight = Matrix(p.class_weight.rows(), p.class_weight.cols());
  z.class_bias.assign(p.class_bias.size(), 0.0);
  return z;
}

std::vector<ParamBlock> param_blocks(ModelParams& p) {
  std::vector<ParamBlock> blocks;
  auto one = [&blocks](const char* name, std::span<double> s) {
    blocks.push_back({name, {s}});
  };
  if (p.extractor == Extractor::kMlp) {
    one("hidden_weight", {p.hidden_weight.data(), p.hidden_weight.size()});
    one("hidden_bias", p.hidden_bias);
  }
  one("attn_combine", p.attn_combine);
  one("attn_content_weight",
      {p.attn_content_weight.data(), p.attn_content_weight.size()});
  one("attn_gate_weight", {p.attn_gate_weight.data(), p.attn_gate_weight.size()});
  one("attn_content_bias", p.attn_content_bias);
  one("attn_gate_bias", p.attn_gate_bias);
  blocks.push_back({"classifier",
                    {{p.class_weight.data(), p.class_weight.size()},
                     std::span<double>(p.class_bias)}});
  return blocks;
}

namespace {

void run_extract(const ModelParams& p, const Matrix& input, Matrix* hidden_pre,
                 Matrix* features) {
  std::size_t n = input.rows();
  if (input.cols() != static_cast<std::size_t>(p.input_dim)) {
    fail(ErrorCode::kInvalidArgument,
         "extract: instance dim " + std::to_string(input.cols()) +
             " does not match model input dim " + std::to_string(p.input_dim));
  }
  if (n == 0) fail(ErrorCode::kInvalidArgument, "extract: empty instance matrix");
  if (p.extractor == Extractor::kIdentity) {
    *features = input;
    return;
  }
  auto dp = static_cast<std::size_t>(p.feature_dim);
  *hidden_pre = Matrix(n, dp);
  *features = Matrix(n, dp);
  for (std::size_t j = 0; j < n; ++j) {
    Vec pre = matvec(p.hidden_weight, input.row(j));
    for (std::size_t f = 0; f < dp; ++f) {
      pre[f] += p.hidden_bias[f];
      hidden_pre->at(j, f) = pre[f];
      features->at(j, f) = pre[f] > 0.0 ? pre[f] : 0.0;
    }
  }
}

void run_attention(const ModelParams& p, const Matrix& features, Matrix* content,
                   Matrix* gate, Vec* score, Vec* attn) {
  std::size_t n = features.rows();
  if (n == 0) fail(ErrorCode::kInvalidArgument, "attention_scores: empty feature matrix");
  if (features.cols() != static_cast<std::size_t>(p.feature_dim)) {
    fail(ErrorCode::kInvalidArgument,
         "attention_scores: feature dim " + std::to_string(features.cols()) +
             " does not match model feature dim " + std::to_string(p.feature_dim));
  }
  auto k = static_cast<std::size_t>(p.num_classes);
  *content = Matrix(n, k);
  *gate = Matrix(n, k);
  score->assign(n, 0.0);
  attn->assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    Vec cv = matvec(p.attn_content_weight, features.row(j));
    Vec gv = matvec(p.attn_gate_weight, features.row(j));
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      double t = std::tanh(cv[c] + p.attn_content_bias[c]);
      double g = sigm(gv[c] + p.attn_gate_bias[c]);
      content->at(j, c) = t;
      gate->at(j, c) = g;
      s += p.attn_combine[c] * t * g;
    }
    (*score)[j] = s;
    (*attn)[j] = sigm(s);
  }
}

Vec run_logits(const ModelParams& p, const Vec& agg) {
  Vec logits = matvec(p.class_weight, agg);
  for (std::size_t c = 0; c < logits.size(); ++c) logits[c] += p.class_bias[c];
  return logits;
}

Matrix reduced_input(const ModelParams& p, const Bag& bag) {
  if (p.reduction == BagReduction::kNone) return bag.instances;
  Vec v = p.reduction == BagReduction::kMean ? reduce_mean(bag) : reduce_maxmin(bag);
  Matrix m(1, v.size());
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

}  // namespace

Matrix extract(const ModelParams& p, const Matrix& input) {
  Matrix hidden_pre, features;
  run_extract(p, input, &hidden_pre, &features);
  return features;
}

Vec attention_scores(const ModelParams& p, const Matrix& features) {
  Matrix content, gate;
  Vec score, attn;
  run_attention(p, features, &content, &gate, &score, &attn);
  return attn;
}

Vec aggregate(const Vec& attn, const Matrix& features) {
  if (attn.size() != features.rows() || attn.empty()) {
    fail(ErrorCode::kInvalidArgument,
         "aggregate: " + std::to_string(attn.size()) + " scores for " +
             std::to_string(features.rows()) + " instances");
  }
  double total = 0.0;
  for (double a : attn) total += a;
  if (!(total >= 1e-12)) {
    fail(ErrorCode::kNumeric, "aggregate: degenerate attention, score mass below 1e-12");
  }
  Vec z(features.cols(), 0.0);
  for (std::size_t j = 0; j < attn.size(); ++j) {
    axpy(attn[j], features.row(j), z);
  }
  for (double& v : z) v /= total;
  return z;
}

Vec classify(const ModelParams& p, const Vec& agg) {
  if (agg.size() != static_cast<std::size_t>(p.feature_dim)) {
    fail(ErrorCode::kInvalidArgument,
         "classify: feature dim " + std::to_string(agg.size()) +
             " does not match model feature dim " + std::to_string(p.feature_dim));
  }
  return stable_softmax(run_logits(p, agg));
}

ForwardTrace forward(const ModelParams& p, const Matrix& instances) {
  ForwardTrace tr;
  tr.input = instances;
  run_extract(p, tr.input, &tr.hidden_pre, &tr.features);
  run_attention(p, tr.features, &tr.content, &tr.gate, &tr.score, &tr.attn);
  tr.attn_sum = 0.0;
  for (double a : tr.attn) tr.attn_sum += a;
  tr.agg = aggregate(tr.attn, tr.features);
  tr.logits = run_logits(p, tr.agg);
  tr.probs = stable_softmax(tr.logits);
  return tr;
}

ForwardTrace forward(const ModelParams& p, const Bag& bag) {
  return forward(p, reduced_input(p, bag));
}

ModelParams backward(const ModelParams& p, const ForwardTrace& tr,
                     const Vec& grad_probs, const Vec& grad_attn) {
  std::size_t n = tr.features.rows();
  auto k = static_cast<std::size_t>(p.num_classes);
  auto dp = static_cast<std::size_t>(p.feature_dim);
  if (!grad_probs.empty() && grad_probs.size() != k) {
    fail(ErrorCode::kInvalidArgument, "backward: grad_probs has wrong length");
  }
  if (!grad_attn.empty() && grad_attn.size() != n) {
    fail(ErrorCode::kInvalidArgument, "backward: grad_attn has wrong length");
  }

  ModelParams g = zeros_like(p);

  // through the softmax: dlogit_c = p_c * (grad_c - sum_j grad_j p_j)
  Vec dlogits(k, 0.0);
  if (!grad_probs.empty()) {
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c) s += grad_probs[c] * tr.probs[c];
    for (std::size_t c = 0; c < k; ++c) {
      dlogits[c] = tr.probs[c] * (grad_probs[c] - s);
    }
  }

  for (std::size_t c = 0; c < k; ++c) {
    g.class_bias[c] = dlogits[c];
    axpy(dlogits[c], tr.agg, g.class_weight.row(c));
  }
  Vec dz = matvec_transposed(p.class_weight, dlogits);

  // through z = sum a_j h_j / sum a: da_j = dz . (h_j - z) / A, dh_j = (a_j/A) dz
  Vec da(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    auto h = tr.features.row(j);
    for (std::size_t f = 0; f < dp; ++f) acc += dz[f] * (h[f] - tr.agg[f]);
    da[j] = acc / tr.attn_sum;
    if (!grad_attn.empty()) da[j] += grad_attn[j];
  }

  for (std::size_t j = 0; j < n; ++j) {
    auto h = tr.features.row(j);
    Vec dh(dp, 0.0);
    axpy(tr.attn[j] / tr.attn_sum, dz, dh);

    // sigmoid, then the gated inner product
    double ds = da[j] * tr.attn[j] * (1.0 - tr.attn[j]);
    for (std::size_t c = 0; c < k; ++c) {
      double t = tr.content.at(j, c);
      double gt = tr.gate.at(j, c);
      g.attn_combine[c] += ds * t * gt;
      double du = ds * p.attn_combine[c];
      double dcp = du * gt * (1.0 - t * t);  // tanh branch, pre-activation
      double dgp = du * t * gt * (1.0 - gt); // gate branch, pre-activation
      g.attn_content_bias[c] += dcp;
      g.attn_gate_bias[c] += dgp;
      axpy(dcp, h, g.attn_content_weight.row(c));
      axpy(dgp, h, g.attn_gate_weight.row(c));
      axpy(dcp, p.attn_content_weight.row(c), dh);
      axpy(dgp, p.attn_gate_weight.row(c), dh);
    }

    if (p.extractor == Extractor::kMlp) {
      auto x = tr.input.row(j);
      for (std::size_t f = 0; f < dp; ++f) {
        if (tr.hidden_pre.at(j, f) <= 0.0) continue;  // ReLU subgradient 0 at 0
        g.hidden_bias[f] += dh[f];
        axpy(dh[f], x, g.hidden_weight.row(f));
      }
    }
  }
  return g;
}

int predict(const ModelParams& p, const Bag& bag) {
  ForwardTrace tr = forward(p, bag);
  return static_cast<int>(argmax(tr.probs));
}

std::vector<std::size_t> attention_histogram(const ModelParams& p,
                                             const MiplDataset& ds, int bins) {
  if (bins < 1) fail(ErrorCode::kInvalidArgument, "attention_histogram: bins must be >= 1");
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  for (const Bag& bag : ds.bags) {
    ForwardTrace tr = forward(p, bag);
    for (double a : tr.attn) {
      auto idx = static_cast<std::size_t>(a * bins);
      if (idx >= counts.size()) idx = counts.size() - 1;
      ++counts[idx];
    }
  }
  return counts;
}

namespace {

void write_array(std::ostream& out, const char* name,
                 std::span<const double> values) {
  out << name;
  char buf[40];
  for (double v : values) {
    auto res = std::to_chars(buf, buf + sizeof(buf), v,
                             std::chars_format::general, 17);
    out << ' ';
    out.write(buf, res.ptr - buf);
  }
  out << '\n';
}

struct ArraySpec {
  const char* name;
  std::span<double> values;
};

std::vector<ArraySpec> array_specs(ModelParams& p) {
  std::vector<ArraySpec> specs;
  if (p.extractor == Extractor::kMlp) {
    specs.push_back({"hidden_weight", {p.hidden_weight.data(), p.hidden_weight.size()}});
    specs.push_back({"hidden_bias", p.hidden_bias});
  }
  specs.push_back({"attn_content_weight",
                   {p.attn_content_weight.data(), p.attn_content_weight.size()}});
  specs.push_back({"attn_gate_weight",
                   {p.attn_gate_weight.data(), p.attn_gate_weight.size()}});
  specs.push_back({"attn_content_bias", p.attn_content_bias});
  specs.push_back({"attn_gate_bias", p.attn_gate_bias});
  specs.push_back({"attn_combine", p.attn_combine});
  specs.push_back({"class_weight", {p.class_weight.data(), p.class_weight.size()}});
  specs.push_back({"class_bias", p.class_bias});
  return specs;
}

}  // namespace

void save_model(const ModelParams& p, std::ostream& out) {
  out << "DEMIPL1 d=" << p.input_dim << " dprime=" << p.feature_dim
      << " k=" << p.num_classes
      << " extractor=" << (p.extractor == Extractor::kMlp ? "mlp" : "id");
  if (p.reduction == BagReduction::kMean) out << " reduction=mean";
  if (p.reduction == BagReduction::kMaxMin) out << " reduction=maxmin";
  out << '\n';
  for (const ArraySpec& spec : array_specs(const_cast<ModelParams&>(p))) {
    write_array(out, spec.name, spec.values);
  }
}

void save_model(const ModelParams& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path + " for writing");
  save_model(p, out);
  out.flush();
  if (!out) fail(ErrorCode::kIo, "write to " + path + " failed");
}

ModelParams load_model(std::istream& in, const std::string& name) {
  std::string line;
  std::size_t line_no = 0;
  auto bad = [&](const std::string& what) -> void {
    fail(ErrorCode::kParse, name + ":" + std::to_string(line_no) + ": " + what);
  };

  if (!std::getline(in, line)) fail(ErrorCode::kParse, name + ": empty model file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();

  int d = 0, dp = 0, k = 0;
  Extractor extractor = Extractor::kIdentity;
  BagReduction reduction = BagReduction::kNone;
  {
    std::istringstream header(line);
    std::string magic, df, dpf, kf, ef;
    header >> magic >> df >> dpf >> kf >> ef;
    auto want = [&](const std::string& token, const char* prefix, int& out_val) {
      std::size_t plen = std::string(prefix).size();
      if (token.rfind(prefix, 0) != 0) bad("malformed model header");
      auto text = token.substr(plen);
      auto res = std::from_chars(text.data(), text.data() + text.size(), out_val);
      if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        bad("malformed model header");
      }
    };
    if (magic != "DEMIPL1") bad("missing DEMIPL1 magic");
    want(df, "d=", d);
    want(dpf, "dprime=", dp);
    want(kf, "k=", k);
    if (ef == "extractor=id") {
      extractor = Extractor::kIdentity;
    } else if (ef == "extractor=mlp") {
      extractor = Extractor::kMlp;
    } else {
      bad("bad extractor field");
    }
    std::string rest;
    if (header >> rest) {
      if (rest == "reduction=mean") {
        reduction = BagReduction::kMean;
      } else if (rest == "reduction=maxmin") {
        reduction = BagReduction::kMaxMin;
      } else {
        bad("unexpected token '" + rest + "' in model header");
      }
      if (header >> rest) bad("trailing content in model header");
    }
    if (d < 1 || dp < 1 || k < 2) bad("bad model dimensions");
    if (extractor == Extractor::kIdentity && dp != d) {
      bad("identity extractor requires dprime == d");
    }
  }

  ModelParams p;
  p.extractor = extractor;
  p.reduction = reduction;
  p.input_dim = d;
  p.feature_dim = dp;
  p.num_classes = k;
  auto du = static_cast<std::size_t>(d);
  auto dpu = static_cast<std::size_t>(dp);
  auto ku = static_cast<std::size_t>(k);
  if (extractor == Extractor::kMlp) {
    p.hidden_weight = Matrix(dpu, du);
    p.hidden_bias.resize(dpu);
  }
  p.attn_content_weight = Matrix(ku, dpu);
  p.attn_gate_weight = Matrix(ku, dpu);
  p.attn_content_bias.resize(ku);
  p.attn_gate_bias.resize(ku);
  p.attn_combine.resize(ku);
  p.class_weight = Matrix(ku, dpu);
  p.class_bias.resize(ku);

  for (const ArraySpec& spec : array_specs(p)) {
    if (!std::getline(in, line)) {
      fail(ErrorCode::kParse,
           name + ": unexpected end of file, expected block " + spec.name);
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t name_len = std::string(spec.name).size();
    if (line.rfind(spec.name, 0) != 0 ||
        (line.size() > name_len && line[name_len] != ' ')) {
      bad(std::string("expected block ") + spec.name);
    }
    const char* ptr = line.data() + name_len;
    const char* end = line.data() + line.size();
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
      while (ptr < end && *ptr == ' ') ++ptr;
      double v = 0.0;
      auto res = std::from_chars(ptr, end, v);
      if (res.ec != std::errc()) {
        bad(std::string("block ") + spec.name + " expects " +
            std::to_string(spec.values.size()) + " values");
      }
      if (!std::isfinite(v)) bad("non-finite parameter value");
      spec.values[i] = v;
      ptr = res.ptr;
    }
    while (ptr < end && *ptr == ' ') ++ptr;
    if (ptr != end) bad(std::string("block ") + spec.name + " has extra values");
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bad("content after last parameter block");
  }
  return p;
}

ModelParams load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  return load_model(in, path);
}

}  // namespace miplkit
