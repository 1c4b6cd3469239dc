#pragma once

// Minimal fully-connected network: affine -> activation chain with a linear
// output layer, square-loss training via reverse-mode accumulation, and a
// flat float64 snapshot format for checkpointing.

#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lrad/activations.hpp"
#include "lrad/linalg.hpp"
#include "lrad/rng.hpp"

namespace lrad {

enum class Activation { relu, gelu };

inline const char* activation_name(Activation a) {
  return a == Activation::relu ? "relu" : "gelu";
}

inline Activation activation_from_name(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "gelu") return Activation::gelu;
  throw std::invalid_argument("unknown activation: " + s);
}

struct MlpArch {
  std::vector<int> widths;  // input, hidden..., output
  Activation activation = Activation::relu;

  void validate() const {
    if (widths.size() < 2) throw std::invalid_argument("MlpArch: need at least two widths");
    for (int w : widths)
      if (w < 1) throw std::invalid_argument("MlpArch: widths must be positive");
  }

  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  int layer_count() const { return static_cast<int>(widths.size()) - 1; }

  std::int64_t param_count() const {
    std::int64_t n = 0;
    for (int l = 0; l < layer_count(); ++l)
      n += static_cast<std::int64_t>(widths[l + 1]) * widths[l] + widths[l + 1];
    return n;
  }
};

struct MlpParams {
  MlpArch arch;
  std::vector<Matrix> weights;  // out x in per layer
  std::vector<Vector> biases;
};

struct MlpGrads {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

// Weights and biases uniform on [-s, s] with s = 1/sqrt(fan_in), drawn layer
// by layer (weight rows first, then the bias), so a given stream always
// produces the same network.
inline MlpParams mlp_init(const MlpArch& arch, RngStream& stream) {
  arch.validate();
  MlpParams p;
  p.arch = arch;
  for (int l = 0; l < arch.layer_count(); ++l) {
    const int fan_in = arch.widths[l];
    const int fan_out = arch.widths[l + 1];
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(fan_out, fan_in);
    for (double& v : w.a) v = -s + 2.0 * s * stream.next_unit();
    Vector b(fan_out);
    for (double& v : b) v = -s + 2.0 * s * stream.next_unit();
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  return p;
}

inline MlpGrads mlp_zero_grads(const MlpArch& arch) {
  MlpGrads g;
  for (int l = 0; l < arch.layer_count(); ++l) {
    g.weights.emplace_back(arch.widths[l + 1], arch.widths[l]);
    g.biases.emplace_back(arch.widths[l + 1], 0.0);
  }
  return g;
}

namespace detail {

inline double activate(Activation a, double z) { return a == Activation::relu ? relu(z) : gelu(z); }

inline double activate_prime(Activation a, double z) {
  return a == Activation::relu ? relu_prime(z) : gelu_prime(z);
}

}  // namespace detail

// scratch buffers for one forward/backward pass; reusable across samples
struct MlpScratch {
  std::vector<Vector> pre;   // pre-activations z_l per layer
  std::vector<Vector> post;  // activations a_l per layer (post[0] unused; input passed separately)
  std::vector<Vector> delta;

  explicit MlpScratch(const MlpArch& arch) {
    for (int l = 0; l < arch.layer_count(); ++l) {
      pre.emplace_back(arch.widths[l + 1], 0.0);
      post.emplace_back(arch.widths[l + 1], 0.0);
      delta.emplace_back(arch.widths[l + 1], 0.0);
    }
  }
};

inline void mlp_forward_into(const MlpParams& p, const Vector& x, MlpScratch& s) {
  const int L = p.arch.layer_count();
  const Vector* in = &x;
  for (int l = 0; l < L; ++l) {
    const Matrix& w = p.weights[l];
    const Vector& b = p.biases[l];
    Vector& z = s.pre[l];
    for (int i = 0; i < w.rows; ++i) {
      double acc = b[i];
      const double* row = &w.a[static_cast<std::size_t>(i) * w.cols];
      for (int j = 0; j < w.cols; ++j) acc += row[j] * (*in)[j];
      z[i] = acc;
    }
    if (l + 1 < L) {
      Vector& a = s.post[l];
      for (int i = 0; i < w.rows; ++i) a[i] = detail::activate(p.arch.activation, z[i]);
      in = &a;
    } else {
      s.post[l] = z;  // linear output layer
    }
  }
}

inline Vector mlp_forward(const MlpParams& p, const Vector& x) {
  if (static_cast<int>(x.size()) != p.arch.input_dim())
    throw std::invalid_argument("mlp_forward: input dimension mismatch");
  MlpScratch s(p.arch);
  mlp_forward_into(p, x, s);
  return s.post.back();
}

// Mean squared error over the batch and its exact gradient. Scalar-output
// networks only; the loss is (1/M) sum_m (net(x_m) - y_m)^2.
inline std::pair<double, MlpGrads> mlp_loss_and_grad(const MlpParams& p,
                                                     const std::vector<Vector>& batch_x,
                                                     const std::vector<double>& batch_y) {
  if (batch_x.empty()) throw std::invalid_argument("mlp_loss_and_grad: empty batch");
  if (batch_x.size() != batch_y.size())
    throw std::invalid_argument("mlp_loss_and_grad: inputs/targets size mismatch");
  if (p.arch.output_dim() != 1)
    throw std::invalid_argument("mlp_loss_and_grad: scalar output required");
  const int L = p.arch.layer_count();
  const int M = static_cast<int>(batch_x.size());
  const double inv_m = 1.0 / static_cast<double>(M);

  MlpGrads g = mlp_zero_grads(p.arch);
  MlpScratch s(p.arch);
  double loss = 0.0;

  for (int m = 0; m < M; ++m) {
    const Vector& x = batch_x[m];
    if (static_cast<int>(x.size()) != p.arch.input_dim())
      throw std::invalid_argument("mlp_loss_and_grad: input dimension mismatch");
    mlp_forward_into(p, x, s);
    const double r = s.post.back()[0] - batch_y[m];
    loss += r * r * inv_m;

    s.delta[L - 1][0] = 2.0 * r * inv_m;
    for (int l = L - 1; l >= 0; --l) {
      const Matrix& w = p.weights[l];
      const Vector& in = (l == 0) ? x : s.post[l - 1];
      Matrix& gw = g.weights[l];
      Vector& gb = g.biases[l];
      const Vector& d = s.delta[l];
      for (int i = 0; i < w.rows; ++i) {
        const double di = d[i];
        if (di != 0.0) {
          double* grow = &gw.a[static_cast<std::size_t>(i) * w.cols];
          for (int j = 0; j < w.cols; ++j) grow[j] += di * in[j];
        }
        gb[i] += di;
      }
      if (l > 0) {
        Vector& dprev = s.delta[l - 1];
        for (int j = 0; j < w.cols; ++j) dprev[j] = 0.0;
        for (int i = 0; i < w.rows; ++i) {
          const double di = d[i];
          if (di == 0.0) continue;
          const double* row = &w.a[static_cast<std::size_t>(i) * w.cols];
          for (int j = 0; j < w.cols; ++j) dprev[j] += di * row[j];
        }
        for (int j = 0; j < w.cols; ++j)
          dprev[j] *= detail::activate_prime(p.arch.activation, s.pre[l - 1][j]);
      }
    }
  }
  return {loss, std::move(g)};
}

inline double mlp_loss(const MlpParams& p, const std::vector<Vector>& batch_x,
                       const std::vector<double>& batch_y) {
  if (batch_x.empty()) throw std::invalid_argument("mlp_loss: empty batch");
  if (p.arch.output_dim() != 1) throw std::invalid_argument("mlp_loss: scalar output required");
  MlpScratch s(p.arch);
  double loss = 0.0;
  for (std::size_t m = 0; m < batch_x.size(); ++m) {
    mlp_forward_into(p, batch_x[m], s);
    const double r = s.post.back()[0] - batch_y[m];
    loss += r * r;
  }
  return loss / static_cast<double>(batch_x.size());
}

// flat layout: per layer, weight rows then bias
inline Vector flatten_params(const MlpParams& p) {
  Vector flat;
  flat.reserve(static_cast<std::size_t>(p.arch.param_count()));
  for (int l = 0; l < p.arch.layer_count(); ++l) {
    flat.insert(flat.end(), p.weights[l].a.begin(), p.weights[l].a.end());
    flat.insert(flat.end(), p.biases[l].begin(), p.biases[l].end());
  }
  return flat;
}

inline Vector flatten_grads(const MlpArch& arch, const MlpGrads& g) {
  Vector flat;
  flat.reserve(static_cast<std::size_t>(arch.param_count()));
  for (int l = 0; l < arch.layer_count(); ++l) {
    flat.insert(flat.end(), g.weights[l].a.begin(), g.weights[l].a.end());
    flat.insert(flat.end(), g.biases[l].begin(), g.biases[l].end());
  }
  return flat;
}

inline MlpParams unflatten_params(const MlpArch& arch, const Vector& flat) {
  if (static_cast<std::int64_t>(flat.size()) != arch.param_count())
    throw std::invalid_argument("unflatten_params: length mismatch");
  MlpParams p;
  p.arch = arch;
  std::size_t pos = 0;
  for (int l = 0; l < arch.layer_count(); ++l) {
    Matrix w(arch.widths[l + 1], arch.widths[l]);
    for (double& v : w.a) v = flat[pos++];
    Vector b(arch.widths[l + 1]);
    for (double& v : b) v = flat[pos++];
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  return p;
}

// Snapshot format: one line of JSON ({"widths":[...],"activation":...,
// "count":N}) followed by N raw little-endian float64 values in flat order.
inline void save_mlp_params(const MlpParams& p, const std::string& path) {
  static_assert(std::endian::native == std::endian::little,
                "snapshot writer assumes a little-endian host");
  nlohmann::json header;
  header["widths"] = p.arch.widths;
  header["activation"] = activation_name(p.arch.activation);
  header["count"] = p.arch.param_count();
  const Vector flat = flatten_params(p);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_mlp_params: cannot open " + path);
  os << header.dump() << '\n';
  os.write(reinterpret_cast<const char*>(flat.data()),
           static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (!os) throw std::runtime_error("save_mlp_params: write failed for " + path);
}

inline MlpParams load_mlp_params(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_mlp_params: cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("load_mlp_params: missing header");
  const nlohmann::json header = nlohmann::json::parse(line);
  MlpArch arch;
  arch.widths = header.at("widths").get<std::vector<int>>();
  arch.activation = activation_from_name(header.at("activation").get<std::string>());
  arch.validate();
  const std::int64_t count = header.at("count").get<std::int64_t>();
  if (count != arch.param_count())
    throw std::runtime_error("load_mlp_params: header count mismatch");
  Vector flat(static_cast<std::size_t>(count));
  is.read(reinterpret_cast<char*>(flat.data()),
          static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (!is) throw std::runtime_error("load_mlp_params: truncated payload");
  return unflatten_params(arch, flat);
}

}  // namespace lrad
