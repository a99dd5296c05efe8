#include "mmsurv/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mmsurv/rng.hpp"

namespace mmsurv {

double clip_prob(double p) { return std::min(1.0 - kProbEps, std::max(kProbEps, p)); }

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double logistic_loss(double h, int y) {
  h = clip_prob(h);
  return y == 1 ? -std::log(h) : -std::log(1.0 - h);
}

// --- Mlp ---------------------------------------------------------------------

int mlp_param_count(const std::vector<int>& layers) {
  int n = 0;
  for (std::size_t l = 1; l < layers.size(); ++l) n += layers[l] * layers[l - 1] + layers[l];
  return n;
}

int Mlp::weight_offset(int layer) const {
  int off = 0;
  for (int l = 1; l < layer; ++l) off += layers[l] * layers[l - 1] + layers[l];
  return off;
}

int Mlp::bias_offset(int layer) const {
  return weight_offset(layer) + layers[layer] * layers[layer - 1];
}

Mlp mlp_init(const std::vector<int>& layers, std::uint64_t seed) {
  if (layers.size() < 2) throw ValidationError("mlp_init: need at least input and output layers");
  for (int s : layers)
    if (s <= 0) throw ValidationError("mlp_init: layer sizes must be positive");
  if (layers.back() != 1) throw ValidationError("mlp_init: output layer size must be 1");

  Mlp m;
  m.layers = layers;
  m.init_seed = seed;
  m.params.assign(mlp_param_count(layers), 0.0);
  Rng rng(seed);
  for (std::size_t l = 1; l < layers.size(); ++l) {
    const double bound = std::sqrt(6.0 / (layers[l - 1] + layers[l]));
    double* w = m.params.data() + m.weight_offset(static_cast<int>(l));
    const int n = layers[l] * layers[l - 1];
    for (int i = 0; i < n; ++i) w[i] = rng.uniform(-bound, bound);
    // biases stay zero
  }
  return m;
}

double mlp_forward(const Mlp& m, std::span<const double> x, ForwardCache* cache) {
  const int n_layers = static_cast<int>(m.layers.size());
  if (static_cast<int>(x.size()) != m.layers[0])
    throw ValidationError("mlp_forward: input has " + std::to_string(x.size()) +
                          " features, expected " + std::to_string(m.layers[0]));
  std::vector<double> cur(x.begin(), x.end());
  if (cache) {
    cache->act.assign(n_layers, {});
    cache->pre.assign(n_layers, {});
    cache->act[0] = cur;
  }
  for (int l = 1; l < n_layers; ++l) {
    const int in = m.layers[l - 1];
    const int out = m.layers[l];
    const double* w = m.weights(l);
    const double* b = m.biases(l);
    std::vector<double> z(out);
    for (int o = 0; o < out; ++o) {
      double acc = b[o];
      const double* wr = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) acc += wr[i] * cur[i];
      z[o] = acc;
    }
    if (cache) cache->pre[l] = z;
    if (l == n_layers - 1) {
      cur.assign(1, sigmoid(z[0]));
    } else {
      for (double& v : z) v = v > 0 ? v : 0.0;  // ReLU
      cur = std::move(z);
    }
    if (cache) cache->act[l] = cur;
  }
  return clip_prob(cur[0]);
}

void mlp_backward(const Mlp& m, const ForwardCache& cache, double upstream_dz,
                  std::span<double> grad) {
  const int n_layers = static_cast<int>(m.layers.size());
  if (cache.act.empty() || cache.act[0].empty())
    throw StateError("mlp_backward: forward cache not populated");
  if (static_cast<int>(grad.size()) != m.param_count())
    throw ValidationError("mlp_backward: gradient buffer size mismatch");

  std::vector<double> delta(1, upstream_dz);  // dJ/dz of the current layer
  for (int l = n_layers - 1; l >= 1; --l) {
    const int in = m.layers[l - 1];
    const int out = m.layers[l];
    const double* w = m.weights(l);
    const std::vector<double>& a_prev = cache.act[l - 1];
    double* gw = grad.data() + m.weight_offset(l);
    double* gb = grad.data() + m.bias_offset(l);
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      double* gwr = gw + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) gwr[i] += d * a_prev[i];
      gb[o] += d;
    }
    if (l > 1) {
      std::vector<double> next(in, 0.0);
      for (int o = 0; o < out; ++o) {
        const double d = delta[o];
        const double* wr = w + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) next[i] += wr[i] * d;
      }
      const std::vector<double>& pre_prev = cache.pre[l - 1];
      for (int i = 0; i < in; ++i)
        if (pre_prev[i] <= 0) next[i] = 0.0;  // ReLU gate
      delta = std::move(next);
    }
  }
}

void save_mlp(const Mlp& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model file: " + path);
  out << "mlp-v1\n";
  out << "layers";
  for (int s : m.layers) out << ' ' << s;
  out << "\nseed " << m.init_seed << "\n";
  out << "params " << m.params.size() << "\n";
  for (double p : m.params) out << format_exact(p) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

Mlp load_mlp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file: " + path);
  std::string tag;
  in >> tag;
  if (tag != "mlp-v1") throw ParseError(path + ": unknown model format '" + tag + "'");
  Mlp m;
  in >> tag;
  if (tag != "layers") throw ParseError(path + ": expected 'layers'");
  {
    std::string rest;
    std::getline(in, rest);
    std::istringstream ls(rest);
    int v;
    while (ls >> v) m.layers.push_back(v);
  }
  in >> tag >> m.init_seed;
  if (tag != "seed") throw ParseError(path + ": expected 'seed'");
  std::size_t n;
  in >> tag >> n;
  if (tag != "params") throw ParseError(path + ": expected 'params'");
  if (static_cast<int>(n) != mlp_param_count(m.layers))
    throw ParseError(path + ": parameter count inconsistent with layer sizes");
  m.params.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!(in >> m.params[i])) throw ParseError(path + ": truncated parameter list");
  return m;
}

// --- Logistic regression ----------------------------------------------------------

double logreg_predict(const LogisticModel& m, std::span<const double> x) {
  double z = m.bias;
  for (std::size_t i = 0; i < m.w.size(); ++i) z += m.w[i] * x[i];
  return clip_prob(sigmoid(z));
}

namespace {

double logreg_loss(const Matrix& x, const std::vector<int>& y, const std::vector<double>& w,
                   double bias) {
  double sum = 0;
  for (int i = 0; i < x.rows; ++i) {
    double z = bias;
    const double* r = x.row(i);
    for (int j = 0; j < x.cols; ++j) z += w[j] * r[j];
    sum += logistic_loss(sigmoid(z), y[i]);
  }
  return sum / x.rows;
}

}  // namespace

LogisticModel fit_logreg(const Matrix& x, const std::vector<int>& y, const LogregOptions& opt) {
  if (x.rows < 2) throw ValidationError("fit_logreg: need at least 2 samples");
  if (static_cast<int>(y.size()) != x.rows)
    throw ValidationError("fit_logreg: label count mismatch");
  int positives = 0;
  for (int v : y) positives += v;
  if (positives == 0 || positives == x.rows)
    throw ValidationError("fit_logreg: degenerate fit, single-class data");

  std::vector<double> w(x.cols, 0.0);
  double bias = 0;
  std::vector<double> gw(x.cols);
  double loss = logreg_loss(x, y, w, bias);

  for (int iter = 0; iter < opt.max_iters; ++iter) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0;
    for (int i = 0; i < x.rows; ++i) {
      double z = bias;
      const double* r = x.row(i);
      for (int j = 0; j < x.cols; ++j) z += w[j] * r[j];
      const double err = sigmoid(z) - y[i];
      for (int j = 0; j < x.cols; ++j) gw[j] += err * r[j];
      gb += err;
    }
    double gnorm_inf = std::abs(gb / x.rows);
    double gnorm_sq = (gb / x.rows) * (gb / x.rows);
    for (int j = 0; j < x.cols; ++j) {
      gw[j] /= x.rows;
      gnorm_inf = std::max(gnorm_inf, std::abs(gw[j]));
      gnorm_sq += gw[j] * gw[j];
    }
    gb /= x.rows;
    if (gnorm_inf < opt.grad_tol) break;

    // backtracking line search (Armijo)
    double step = 1.0;
    bool moved = false;
    for (int bt = 0; bt < 40; ++bt) {
      std::vector<double> w_new(w);
      for (int j = 0; j < x.cols; ++j) w_new[j] -= step * gw[j];
      const double bias_new = bias - step * gb;
      const double loss_new = logreg_loss(x, y, w_new, bias_new);
      if (loss_new <= loss - 1e-4 * step * gnorm_sq) {
        w = std::move(w_new);
        bias = bias_new;
        loss = loss_new;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;  // step underflow, loss is flat
  }
  LogisticModel m;
  m.w = std::move(w);
  m.bias = bias;
  return m;
}

// --- Auxiliary model -------------------------------------------------------------

double aux_predict(const AuxiliaryModel& m, const PatientRecord& r) {
  if (m.feature_a < 0 || m.feature_b < 0 || m.feature_a >= kNumModelFeatures ||
      m.feature_b >= kNumModelFeatures)
    throw ValidationError("aux_predict: model has invalid feature indices");
  const double raw_a = r.present(m.feature_a) ? r.raw(m.feature_a) : m.mean_a;
  const double raw_b = r.present(m.feature_b) ? r.raw(m.feature_b) : m.mean_b;
  const double xa = m.std_a > 0 ? (raw_a - m.mean_a) / m.std_a : 0.0;
  const double xb = m.std_b > 0 ? (raw_b - m.mean_b) / m.std_b : 0.0;
  return clip_prob(sigmoid(m.w_a * xa + m.w_b * xb + m.bias));
}

AuxiliaryModel fit_aux_model(const std::vector<PatientRecord>& records, int feature_a,
                             int feature_b, const LogregOptions& opt) {
  if (feature_a == feature_b) throw ValidationError("fit_aux_model: features must be distinct");
  if (feature_a > feature_b) std::swap(feature_a, feature_b);
  std::vector<int> fit_idx(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) fit_idx[i] = static_cast<int>(i);
  const Preprocessor prep = fit_preprocessor(records, fit_idx);

  Matrix x(static_cast<int>(records.size()), 2);
  for (int i = 0; i < x.rows; ++i) {
    x.at(i, 0) = prep.standardized(records[i], feature_a);
    x.at(i, 1) = prep.standardized(records[i], feature_b);
  }
  const LogisticModel lm = fit_logreg(x, labels_of(records), opt);

  AuxiliaryModel m;
  m.feature_a = feature_a;
  m.feature_b = feature_b;
  m.w_a = lm.w[0];
  m.w_b = lm.w[1];
  m.bias = lm.bias;
  m.mean_a = prep.mean[feature_a];
  m.std_a = prep.constant[feature_a] ? 0.0 : prep.stddev[feature_a];
  m.mean_b = prep.mean[feature_b];
  m.std_b = prep.constant[feature_b] ? 0.0 : prep.stddev[feature_b];
  return m;
}

void save_aux_model(const AuxiliaryModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model file: " + path);
  out << "logreg-v1\n";
  out << "features " << kFeatureNames[m.feature_a] << ' ' << kFeatureNames[m.feature_b] << "\n";
  out << "weights " << format_exact(m.w_a) << ' ' << format_exact(m.w_b) << ' '
      << format_exact(m.bias) << "\n";
  out << "stats " << format_exact(m.mean_a) << ' ' << format_exact(m.std_a) << ' '
      << format_exact(m.mean_b) << ' ' << format_exact(m.std_b) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

AuxiliaryModel load_aux_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file: " + path);
  std::string tag, fa, fb;
  in >> tag;
  if (tag != "logreg-v1") throw ParseError(path + ": unknown model format '" + tag + "'");
  AuxiliaryModel m;
  in >> tag >> fa >> fb;
  if (tag != "features") throw ParseError(path + ": expected 'features'");
  m.feature_a = feature_index(fa);
  m.feature_b = feature_index(fb);
  if (m.feature_a < 0 || m.feature_b < 0)
    throw ParseError(path + ": unknown feature name in model file");
  in >> tag >> m.w_a >> m.w_b >> m.bias;
  if (tag != "weights") throw ParseError(path + ": expected 'weights'");
  in >> tag >> m.mean_a >> m.std_a >> m.mean_b >> m.std_b;
  if (tag != "stats") throw ParseError(path + ": expected 'stats'");
  if (!in) throw ParseError(path + ": truncated model file");
  return m;
}

}  // namespace mmsurv
