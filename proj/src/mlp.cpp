#include "croprow/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace croprow::nn {

template <typename Scalar>
Mlp<Scalar>::Mlp(std::vector<int> sizes, std::mt19937_64& rng) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("network needs input and output sizes");
  for (int s : sizes_) {
    if (s < 1) throw std::invalid_argument("layer sizes must be positive");
  }
  for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
    const int in = sizes_[i];
    const int out = sizes_[i + 1];
    const double bound = std::sqrt(6.0 / in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    Layer layer{Matrix(out, in), Vector::Zero(out)};
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
        layer.weight(r, c) = static_cast<Scalar>(dist(rng));
      }
    }
    layers_.push_back(std::move(layer));
  }
}

template <typename Scalar>
std::size_t Mlp<Scalar>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

template <typename Scalar>
typename Mlp<Scalar>::Matrix Mlp<Scalar>::forward(const Matrix& input) const {
  Matrix x = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Matrix z = layers_[i].weight * x;
    z.colwise() += layers_[i].bias;
    if (i + 1 < layers_.size()) z = z.cwiseMax(Scalar(0));
    x = std::move(z);
  }
  return x;
}

template <typename Scalar>
typename Mlp<Scalar>::Matrix Mlp<Scalar>::forward(const Matrix& input, Tape& tape) const {
  tape.inputs.clear();
  tape.inputs.reserve(layers_.size());
  tape.inputs.push_back(input);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Matrix z = layers_[i].weight * tape.inputs.back();
    z.colwise() += layers_[i].bias;
    if (i + 1 < layers_.size()) {
      tape.inputs.push_back(z.cwiseMax(Scalar(0)));
    } else {
      return z;
    }
  }
  return tape.inputs.back();
}

template <typename Scalar>
std::vector<typename Mlp<Scalar>::Layer> Mlp<Scalar>::backward(const Tape& tape,
                                                               const Matrix& grad_output) const {
  std::vector<Layer> grads(layers_.size());
  Matrix delta = grad_output;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const Matrix& x = tape.inputs[k];
    grads[k].weight.noalias() = delta * x.transpose();
    grads[k].bias = delta.rowwise().sum();
    if (k == 0) break;
    Matrix upstream = layers_[k].weight.transpose() * delta;
    // ReLU derivative: x is the post-activation of layer k - 1.
    delta = (x.array() > Scalar(0)).select(upstream, Scalar(0));
  }
  return grads;
}

template <typename Scalar>
std::vector<Scalar> Mlp<Scalar>::flatten() const {
  std::vector<Scalar> flat;
  flat.reserve(parameter_count());
  for (const auto& l : layers_) {
    flat.insert(flat.end(), l.weight.data(), l.weight.data() + l.weight.size());
    flat.insert(flat.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return flat;
}

template <typename Scalar>
void Mlp<Scalar>::assign(const std::vector<Scalar>& flat) {
  if (flat.size() != parameter_count()) {
    throw std::invalid_argument("parameter vector has " + std::to_string(flat.size()) +
                                " entries, network expects " + std::to_string(parameter_count()));
  }
  std::size_t offset = 0;
  for (auto& l : layers_) {
    std::copy_n(flat.data() + offset, l.weight.size(), l.weight.data());
    offset += l.weight.size();
    std::copy_n(flat.data() + offset, l.bias.size(), l.bias.data());
    offset += l.bias.size();
  }
}

template <typename Scalar>
double clip_global_norm(std::vector<typename Mlp<Scalar>::Layer>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) {
    sq += static_cast<double>(g.weight.squaredNorm()) + static_cast<double>(g.bias.squaredNorm());
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const auto scale = static_cast<Scalar>(max_norm / (norm + 1e-6));
    for (auto& g : grads) {
      g.weight *= scale;
      g.bias *= scale;
    }
  }
  return norm;
}

template <typename Scalar>
Adam<Scalar>::Adam(const Mlp<Scalar>& net, Options options) : options_(options) {
  for (const auto& l : net.layers()) {
    m_.push_back({Mlp<Scalar>::Matrix::Zero(l.weight.rows(), l.weight.cols()),
                  Mlp<Scalar>::Vector::Zero(l.bias.size())});
  }
  v_ = m_;
}

template <typename Scalar>
void Adam<Scalar>::step(Mlp<Scalar>& net, const std::vector<typename Mlp<Scalar>::Layer>& grads) {
  ++t_;
  const auto b1 = static_cast<Scalar>(options_.beta1);
  const auto b2 = static_cast<Scalar>(options_.beta2);
  const auto bias1 = static_cast<Scalar>(1.0 - std::pow(options_.beta1, static_cast<double>(t_)));
  const auto bias2 = static_cast<Scalar>(1.0 - std::pow(options_.beta2, static_cast<double>(t_)));
  const auto lr = static_cast<Scalar>(options_.learning_rate);
  const auto eps = static_cast<Scalar>(options_.epsilon);

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / bias1) / ((v.array() / bias2).sqrt() + eps);
  };
  auto& layers = net.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    update(layers[i].weight, m_[i].weight, v_[i].weight, grads[i].weight);
    update(layers[i].bias, m_[i].bias, v_[i].bias, grads[i].bias);
  }
}

template class Mlp<float>;
template class Mlp<double>;
template class Adam<float>;
template class Adam<double>;
template double clip_global_norm<float>(std::vector<Mlp<float>::Layer>&, double);
template double clip_global_norm<double>(std::vector<Mlp<double>::Layer>&, double);

}  // namespace croprow::nn
