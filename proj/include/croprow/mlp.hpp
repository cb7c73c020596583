// Fully-connected ReLU network with hand-written backpropagation and Adam.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

namespace croprow::nn {

template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Layer {
    Matrix weight;  // out x in
    Vector bias;
  };

  /// Activations recorded by forward() for use in backward(). Column j of
  /// every matrix belongs to sample j of the batch.
  struct Tape {
    std::vector<Matrix> inputs;  // input of each layer (post-ReLU of the previous)
  };

  Mlp() = default;

  /// Layer widths including input and output, e.g. {5, 1024, 1024, 1024, 132}.
  /// Weights use He-uniform initialisation, biases start at zero.
  Mlp(std::vector<int> sizes, std::mt19937_64& rng);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::size_t parameter_count() const;

  /// Input is (input_size x batch); returns (output_size x batch).
  Matrix forward(const Matrix& input) const;
  Matrix forward(const Matrix& input, Tape& tape) const;

  /// Gradients of a scalar loss w.r.t. every parameter given dLoss/dOutput.
  std::vector<Layer> backward(const Tape& tape, const Matrix& grad_output) const;

  /// Flat parameter vector (weights column-major, then bias, layer by layer).
  std::vector<Scalar> flatten() const;
  void assign(const std::vector<Scalar>& flat);

  friend bool operator==(const Mlp& a, const Mlp& b) {
    if (a.sizes_ != b.sizes_) return false;
    for (std::size_t i = 0; i < a.layers_.size(); ++i) {
      if (a.layers_[i].weight != b.layers_[i].weight || a.layers_[i].bias != b.layers_[i].bias) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<int> sizes_;
  std::vector<Layer> layers_;
};

/// Scales gradients in place so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
template <typename Scalar>
double clip_global_norm(std::vector<typename Mlp<Scalar>::Layer>& grads, double max_norm);

template <typename Scalar>
class Adam {
 public:
  struct Options {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  Adam() = default;
  Adam(const Mlp<Scalar>& net, Options options);

  void step(Mlp<Scalar>& net, const std::vector<typename Mlp<Scalar>::Layer>& grads);
  std::int64_t steps() const { return t_; }

 private:
  Options options_;
  std::vector<typename Mlp<Scalar>::Layer> m_;
  std::vector<typename Mlp<Scalar>::Layer> v_;
  std::int64_t t_ = 0;
};

extern template class Mlp<float>;
extern template class Mlp<double>;
extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace croprow::nn
