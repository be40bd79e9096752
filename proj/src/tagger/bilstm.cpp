#include "clinrel/tagger/bilstm.hpp"

#include <cmath>

#include "clinrel/error.hpp"
#include "clinrel/simd/kernels.hpp"

namespace clinrel {

namespace {

LstmCellParams make_cell(std::size_t in, std::size_t h) {
  return {Matrix(4 * h, in), Matrix(4 * h, h), Matrix(4 * h, 1)};
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Runs one direction over `input`; positions visited ascending or descending.
void run_direction(const LstmCellParams& p, const Matrix& input, bool reverse, BiLstmCache::Direction& d) {
  const std::size_t T = input.rows();
  const std::size_t h = p.u.cols();
  d.gates = Matrix(T, 4 * h);
  d.cell = Matrix(T, h);
  d.hidden = Matrix(T, h);
  std::vector<double> z(4 * h), zh(4 * h);
  std::vector<double> zero_h(h, 0.0);
  for (std::size_t step = 0; step < T; ++step) {
    const std::size_t t = reverse ? T - 1 - step : step;
    const bool first = step == 0;
    const std::size_t prev = reverse ? t + 1 : t - 1;
    std::span<const double> h_prev = first ? std::span<const double>(zero_h) : d.hidden.row(prev);
    std::span<const double> c_prev = first ? std::span<const double>(zero_h) : d.cell.row(prev);

    simd::gemv(p.w, input.row(t), z);
    simd::gemv(p.u, h_prev, zh);
    auto gates = d.gates.row(t);
    for (std::size_t k = 0; k < 4 * h; ++k) {
      const double pre = z[k] + zh[k] + p.b(k, 0);
      gates[k] = (k >= 2 * h && k < 3 * h) ? std::tanh(pre) : sigmoid(pre);
    }
    auto c = d.cell.row(t);
    auto hid = d.hidden.row(t);
    for (std::size_t k = 0; k < h; ++k) {
      const double i = gates[k], f = gates[h + k], g = gates[2 * h + k], o = gates[3 * h + k];
      c[k] = f * c_prev[k] + i * g;
      hid[k] = o * std::tanh(c[k]);
    }
  }
}

/// Backpropagates one direction; `dh_out` is d(loss)/d(hidden) from above.
void backprop_direction(const LstmCellParams& p, const Matrix& input, const BiLstmCache::Direction& d,
                        bool reverse, const Matrix& dh_out, std::size_t dh_col_offset, LstmCellParams& g,
                        Matrix* dinput) {
  const std::size_t T = input.rows();
  const std::size_t h = p.u.cols();
  std::vector<double> dh_next(h, 0.0), dc_next(h, 0.0), dz(4 * h), dh_prev(h);
  for (std::size_t step = T; step-- > 0;) {
    const std::size_t t = reverse ? T - 1 - step : step;
    const bool first = step == 0;
    const std::size_t prev = reverse ? t + 1 : t - 1;
    auto gates = d.gates.row(t);
    auto c = d.cell.row(t);
    for (std::size_t k = 0; k < h; ++k) {
      const double i = gates[k], f = gates[h + k], gg = gates[2 * h + k], o = gates[3 * h + k];
      const double dh = dh_out(t, dh_col_offset + k) + dh_next[k];
      const double tc = std::tanh(c[k]);
      const double dc = dh * o * (1.0 - tc * tc) + dc_next[k];
      const double c_prev = first ? 0.0 : d.cell(prev, k);
      dz[k] = dc * gg * i * (1.0 - i);
      dz[h + k] = dc * c_prev * f * (1.0 - f);
      dz[2 * h + k] = dc * i * (1.0 - gg * gg);
      dz[3 * h + k] = dh * tc * o * (1.0 - o);
      dc_next[k] = dc * f;
    }
    simd::rank1_add(g.w, 1.0, dz, input.row(t));
    if (!first) simd::rank1_add(g.u, 1.0, dz, d.hidden.row(prev));
    for (std::size_t k = 0; k < 4 * h; ++k) g.b(k, 0) += dz[k];
    if (dinput) simd::gemv_transposed_add(p.w, dz, dinput->row(t));
    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
    simd::gemv_transposed_add(p.u, dz, dh_prev);
    dh_next.swap(dh_prev);
  }
}

}  // namespace

BiLstmParams::BiLstmParams(std::size_t input_dim, std::size_t hidden_per_direction, std::size_t num_layers)
    : input_dim_(input_dim), hidden_(hidden_per_direction) {
  if (num_layers == 0 || hidden_per_direction == 0 || input_dim == 0)
    throw ConfigError("Bi-LSTM needs positive input width, hidden width and layer count");
  for (std::size_t l = 0; l < num_layers; ++l) {
    const std::size_t in = l == 0 ? input_dim : 2 * hidden_per_direction;
    forward_.push_back(make_cell(in, hidden_per_direction));
    backward_.push_back(make_cell(in, hidden_per_direction));
  }
}

void BiLstmParams::initialize(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for_each_tensor([&](const std::string&, Matrix& m) {
    for (double& v : m.values()) v = dist(rng);
  });
  for (auto* cells : {&forward_, &backward_}) {
    for (auto& cell : *cells) {
      cell.b.fill(0.0);
      for (std::size_t k = hidden_; k < 2 * hidden_; ++k) cell.b(k, 0) = 1.0;
    }
  }
}

BiLstmParams BiLstmParams::zeros_like() const {
  return BiLstmParams(input_dim_, hidden_, forward_.size());
}

void BiLstmParams::for_each_tensor(const std::function<void(const std::string&, Matrix&)>& fn) {
  for (std::size_t l = 0; l < forward_.size(); ++l) {
    for (auto [dir, cell] : {std::pair{"fwd", &forward_[l]}, std::pair{"bwd", &backward_[l]}}) {
      const std::string prefix = "lstm." + std::to_string(l) + "." + dir + ".";
      fn(prefix + "w", cell->w);
      fn(prefix + "u", cell->u);
      fn(prefix + "b", cell->b);
    }
  }
}

void BiLstmParams::for_each_tensor(const std::function<void(const std::string&, const Matrix&)>& fn) const {
  const_cast<BiLstmParams*>(this)->for_each_tensor(
      [&](const std::string& name, Matrix& m) { fn(name, static_cast<const Matrix&>(m)); });
}

Matrix bilstm_forward(const BiLstmParams& params, const Matrix& inputs, BiLstmCache* cache) {
  if (inputs.cols() != params.input_dim())
    throw ShapeError("Bi-LSTM expects input width " + std::to_string(params.input_dim()) + ", got " +
                     std::to_string(inputs.cols()));
  const std::size_t T = inputs.rows();
  const std::size_t h = params.hidden_per_direction();
  BiLstmCache local;
  BiLstmCache& c = cache ? *cache : local;
  c.layers.assign(params.num_layers(), {});
  Matrix current = inputs;
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    auto& layer = c.layers[l];
    layer.input = std::move(current);
    run_direction(params.forward(l), layer.input, false, layer.fwd);
    run_direction(params.backward(l), layer.input, true, layer.bwd);
    current = Matrix(T, 2 * h);
    for (std::size_t t = 0; t < T; ++t) {
      auto out = current.row(t);
      auto f = layer.fwd.hidden.row(t);
      auto b = layer.bwd.hidden.row(t);
      std::copy(f.begin(), f.end(), out.begin());
      std::copy(b.begin(), b.end(), out.begin() + static_cast<std::ptrdiff_t>(h));
    }
  }
  return current;
}

Matrix bilstm_backward(const BiLstmParams& params, const BiLstmCache& cache, const Matrix& output_grad,
                       BiLstmParams& grads, bool want_input_grad) {
  const std::size_t h = params.hidden_per_direction();
  if (cache.layers.size() != params.num_layers()) throw ShapeError("Bi-LSTM cache does not match parameters");
  Matrix upstream = output_grad;
  for (std::size_t l = params.num_layers(); l-- > 0;) {
    const auto& layer = cache.layers[l];
    require_shape(upstream, layer.input.rows(), 2 * h, "Bi-LSTM output gradient");
    const bool need_dinput = l > 0 || want_input_grad;
    Matrix dinput = need_dinput ? layer.input.zeros_like() : Matrix();
    backprop_direction(params.forward(l), layer.input, layer.fwd, false, upstream, 0, grads.forward(l),
                       need_dinput ? &dinput : nullptr);
    backprop_direction(params.backward(l), layer.input, layer.bwd, true, upstream, h, grads.backward(l),
                       need_dinput ? &dinput : nullptr);
    upstream = std::move(dinput);
  }
  return want_input_grad ? upstream : Matrix();
}

}  // namespace clinrel
