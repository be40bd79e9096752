#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "clinrel/matrix.hpp"

namespace clinrel {

/// One LSTM direction. Gate blocks are stacked [input, forget, cell, output]
/// along the rows of w, u and b.
struct LstmCellParams {
  Matrix w;  // 4h x in
  Matrix u;  // 4h x h
  Matrix b;  // 4h x 1
};

inline bool operator==(const LstmCellParams& a, const LstmCellParams& b) {
  return a.w == b.w && a.u == b.u && a.b == b.b;
}

/// Stacked bidirectional LSTM. Layer l > 0 reads the 2h-wide output of
/// layer l-1; the encoder output is the last layer's [forward | backward].
class BiLstmParams {
 public:
  BiLstmParams() = default;
  BiLstmParams(std::size_t input_dim, std::size_t hidden_per_direction, std::size_t num_layers);

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t hidden_per_direction() const noexcept { return hidden_; }
  std::size_t output_dim() const noexcept { return 2 * hidden_; }
  std::size_t num_layers() const noexcept { return forward_.size(); }

  LstmCellParams& forward(std::size_t layer) { return forward_.at(layer); }
  const LstmCellParams& forward(std::size_t layer) const { return forward_.at(layer); }
  LstmCellParams& backward(std::size_t layer) { return backward_.at(layer); }
  const LstmCellParams& backward(std::size_t layer) const { return backward_.at(layer); }

  /// Uniform(-1/sqrt(h), 1/sqrt(h)) weights; forget-gate bias 1.
  void initialize(std::mt19937_64& rng);

  BiLstmParams zeros_like() const;

  /// Named views of every parameter tensor, in a fixed order.
  void for_each_tensor(const std::function<void(const std::string&, Matrix&)>& fn);
  void for_each_tensor(const std::function<void(const std::string&, const Matrix&)>& fn) const;

  friend bool operator==(const BiLstmParams&, const BiLstmParams&) = default;

 private:
  std::size_t input_dim_ = 0;
  std::size_t hidden_ = 0;
  std::vector<LstmCellParams> forward_;
  std::vector<LstmCellParams> backward_;
};

/// Activations kept from a forward pass for backpropagation.
struct BiLstmCache {
  struct Direction {
    Matrix gates;  // T x 4h, post-activation [i f g o]
    Matrix cell;   // T x h
    Matrix hidden; // T x h, indexed by sequence position
  };
  struct Layer {
    Matrix input;  // T x in
    Direction fwd;
    Direction bwd;
  };
  std::vector<Layer> layers;
};

/// T x 2h output; row t is [forward h_t | backward h_t]. Throws ShapeError on width mismatch.
Matrix bilstm_forward(const BiLstmParams& params, const Matrix& inputs, BiLstmCache* cache = nullptr);

/// Accumulates parameter gradients for d(loss)/d(output) into `grads`.
/// Returns d(loss)/d(inputs) when `want_input_grad` is set, else an empty matrix.
Matrix bilstm_backward(const BiLstmParams& params, const BiLstmCache& cache, const Matrix& output_grad,
                       BiLstmParams& grads, bool want_input_grad = false);

}  // namespace clinrel
