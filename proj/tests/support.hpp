#pragma once

// Random models, datasets and reference implementations shared by the tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <variant>
#include <vector>

#include "deepcam/modelio.hpp"
#include "deepcam/network.hpp"

namespace deepcam::testing {

inline RowMatrixXf random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  RowMatrixXf m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

inline Eigen::VectorXf random_vector(std::mt19937_64& rng, Eigen::Index n, float lo = -1, float hi = 1) {
  std::uniform_real_distribution<float> u(lo, hi);
  Eigen::VectorXf v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline Conv2d make_conv(std::mt19937_64& rng, std::uint32_t in_c, std::uint32_t out_c, std::uint32_t kh,
                        std::uint32_t kw, std::uint32_t stride, std::uint32_t pad, bool bias, bool relu) {
  Conv2d c;
  c.geometry = {in_c, kh, kw, stride, pad};
  c.out_c = out_c;
  c.weights = random_matrix(rng, out_c, c.geometry.patch_length());
  if (bias) c.bias = random_vector(rng, out_c);
  c.fused_relu = relu;
  return c;
}

inline Linear make_linear(std::mt19937_64& rng, std::uint32_t in, std::uint32_t out, bool bias, bool relu) {
  Linear l;
  l.in_features = in;
  l.out_features = out;
  l.weights = random_matrix(rng, out, in);
  if (bias) l.bias = random_vector(rng, out);
  l.fused_relu = relu;
  return l;
}

/// A shape-valid model using every layer kind with some probability.
inline NetworkModel random_model(std::mt19937_64& rng) {
  auto pick = [&](std::uint32_t lo, std::uint32_t hi) {
    return std::uniform_int_distribution<std::uint32_t>(lo, hi)(rng);
  };
  auto coin = [&] { return pick(0, 1) == 1; };
  for (;;) {
    NetworkModel m;
    m.input = {pick(1, 3), pick(4, 10), pick(4, 10)};
    Dims cur = m.input;
    const std::uint32_t depth = pick(1, 5);
    try {
      for (std::uint32_t d = 0; d < depth && cur.h > 0 && cur.w > 0; ++d) {
        switch (pick(0, 6)) {
          case 0: {
            const std::uint32_t k = pick(1, std::min<std::uint32_t>(3, std::min(cur.h, cur.w)));
            const auto conv = make_conv(rng, cur.c, pick(1, 5), k, k, pick(1, 2), pick(0, 1), coin(), coin());
            cur = conv.geometry.output_dims(cur, conv.out_c);
            m.layers.emplace_back(conv);
            break;
          }
          case 1:
            m.layers.emplace_back(Relu{});
            break;
          case 2:
            if (cur.h >= 2 && cur.w >= 2) {
              m.layers.emplace_back(MaxPool{2, pick(1, 2)});
              cur = m.infer_dims().back();
            }
            break;
          case 3:
            if (cur.h >= 2 && cur.w >= 2) {
              m.layers.emplace_back(AvgPool{2, 2});
              cur = m.infer_dims().back();
            }
            break;
          case 4: {
            BatchNorm bn;
            bn.channels = cur.c;
            bn.eps = 1e-3f;
            bn.gamma = random_vector(rng, cur.c);
            bn.beta = random_vector(rng, cur.c);
            bn.mean = random_vector(rng, cur.c);
            bn.var = random_vector(rng, cur.c, 0.5f, 2.0f);
            m.layers.emplace_back(bn);
            break;
          }
          case 5:
            m.layers.emplace_back(Add{m.layers.empty() || !coin() ? Add::kNetworkInput
                                                                 : static_cast<std::uint32_t>(m.layers.size() - 1)});
            break;
          default:
            m.layers.emplace_back(Flatten{});
            break;
        }
        if (!m.layers.empty()) cur = m.infer_dims().back();
      }
      m.layers.emplace_back(make_linear(rng, static_cast<std::uint32_t>(cur.size()), pick(1, 6), coin(), false));
      m.infer_dims();
      return m;
    } catch (const Error&) {
      // shapes stopped lining up; draw again
    }
  }
}

inline Dataset random_dataset(std::mt19937_64& rng, std::size_t count) {
  std::uniform_int_distribution<std::uint32_t> d(1, 6);
  Dataset ds;
  ds.dims = {d(rng), d(rng), d(rng)};
  ds.num_classes = static_cast<std::uint16_t>(d(rng) + 1);
  ds.samples = random_matrix(rng, static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(ds.dims.size()));
  std::uniform_int_distribution<std::uint16_t> lab(0, static_cast<std::uint16_t>(ds.num_classes - 1));
  for (std::size_t i = 0; i < count; ++i) ds.labels.push_back(lab(rng));
  return ds;
}

inline ActivationTensor random_tensor(std::mt19937_64& rng, Dims dims) {
  ActivationTensor t;
  t.dims = dims;
  t.values = random_vector(rng, static_cast<Eigen::Index>(dims.size())).cast<double>();
  return t;
}

/// Direct nested-loop convolution, independent of im2col.
inline ActivationTensor direct_conv(const ActivationTensor& in, const Conv2d& conv) {
  const auto& g = conv.geometry;
  const Dims out = g.output_dims(in.dims, conv.out_c);
  ActivationTensor r;
  r.dims = out;
  r.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out.size()));
  for (std::uint32_t k = 0; k < out.c; ++k)
    for (std::uint32_t oy = 0; oy < out.h; ++oy)
      for (std::uint32_t ox = 0; ox < out.w; ++ox) {
        double acc = 0;
        for (std::uint32_t c = 0; c < g.in_c; ++c)
          for (std::uint32_t ky = 0; ky < g.kernel_h; ++ky)
            for (std::uint32_t kx = 0; kx < g.kernel_w; ++kx) {
              const long iy = long(oy) * g.stride + ky - g.pad, ix = long(ox) * g.stride + kx - g.pad;
              if (iy < 0 || ix < 0 || iy >= long(in.dims.h) || ix >= long(in.dims.w)) continue;
              const double w = conv.weights(k, (c * g.kernel_h + ky) * g.kernel_w + kx);
              acc += w * in.values[(c * in.dims.h + iy) * in.dims.w + ix];
            }
        if (conv.bias) acc += (*conv.bias)[k];
        if (conv.fused_relu) acc = std::max(acc, 0.0);
        r.values[(k * out.h + oy) * out.w + ox] = acc;
      }
  return r;
}

/// Straightforward float64 forward pass used as the exact reference.
inline Eigen::VectorXd reference_forward(const NetworkModel& m, const ActivationTensor& input) {
  std::vector<ActivationTensor> outs;
  ActivationTensor cur = input;
  for (const auto& layer : m.layers) {
    ActivationTensor next;
    if (const auto* c = std::get_if<Conv2d>(&layer)) {
      next = direct_conv(cur, *c);
    } else if (const auto* l = std::get_if<Linear>(&layer)) {
      next.dims = {l->out_features, 1, 1};
      next.values.resize(l->out_features);
      for (std::uint32_t o = 0; o < l->out_features; ++o) {
        double acc = 0;
        for (std::uint32_t i = 0; i < l->in_features; ++i) acc += double(l->weights(o, i)) * cur.values[i];
        if (l->bias) acc += (*l->bias)[o];
        next.values[o] = l->fused_relu ? std::max(acc, 0.0) : acc;
      }
    } else if (std::holds_alternative<Relu>(layer)) {
      next = cur;
      for (auto& v : next.values) v = std::max(v, 0.0);
    } else if (std::holds_alternative<MaxPool>(layer) || std::holds_alternative<AvgPool>(layer)) {
      const bool is_max = std::holds_alternative<MaxPool>(layer);
      const std::uint32_t win = is_max ? std::get<MaxPool>(layer).window : std::get<AvgPool>(layer).window;
      const std::uint32_t st = is_max ? std::get<MaxPool>(layer).stride : std::get<AvgPool>(layer).stride;
      next.dims = {cur.dims.c, (cur.dims.h - win) / st + 1, (cur.dims.w - win) / st + 1};
      next.values.resize(static_cast<Eigen::Index>(next.dims.size()));
      for (std::uint32_t c = 0; c < next.dims.c; ++c)
        for (std::uint32_t y = 0; y < next.dims.h; ++y)
          for (std::uint32_t x = 0; x < next.dims.w; ++x) {
            double acc = is_max ? -INFINITY : 0.0;
            for (std::uint32_t dy = 0; dy < win; ++dy)
              for (std::uint32_t dx = 0; dx < win; ++dx) {
                const double v = cur.values[(c * cur.dims.h + y * st + dy) * cur.dims.w + x * st + dx];
                acc = is_max ? std::max(acc, v) : acc + v;
              }
            next.values[(c * next.dims.h + y) * next.dims.w + x] = is_max ? acc : acc / (win * win);
          }
    } else if (const auto* bn = std::get_if<BatchNorm>(&layer)) {
      next = cur;
      const std::size_t plane = std::size_t{cur.dims.h} * cur.dims.w;
      for (Eigen::Index i = 0; i < next.values.size(); ++i) {
        const auto c = static_cast<Eigen::Index>(std::size_t(i) / plane);
        next.values[i] = double(bn->gamma[c]) * (cur.values[i] - double(bn->mean[c])) /
                             std::sqrt(double(bn->var[c]) + double(bn->eps)) +
                         double(bn->beta[c]);
      }
    } else if (std::holds_alternative<Flatten>(layer)) {
      next = cur;
      next.dims = {static_cast<std::uint32_t>(cur.dims.size()), 1, 1};
    } else {
      const auto src = std::get<Add>(layer).source;
      next = cur;
      next.values += (src == Add::kNetworkInput ? input : outs[src]).values;
    }
    outs.push_back(next);
    cur = next;
  }
  return cur.values;
}

}  // namespace deepcam::testing
