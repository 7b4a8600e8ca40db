#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gridsafe/error.hpp"

namespace gridsafe {

enum class Activation { identity, tanh, sigmoid };

struct DenseLayer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;
  friend bool operator==(const DenseLayer& x, const DenseLayer& y) {
    return x.w.rows() == y.w.rows() && x.w.cols() == y.w.cols() && x.w == y.w && x.b == y.b;
  }
};

/// Fully connected network; columns of the input matrix are batch items.
class Mlp {
 public:
  struct Cache {
    std::vector<Eigen::MatrixXd> a;  // a[0] input, a[l+1] output of layer l
  };

  Mlp() = default;

  template <class Rng>
  Mlp(const std::vector<int>& sizes, Activation hidden, Activation output, Rng& rng)
      : hidden_(hidden), output_(output) {
    if (sizes.size() < 2) throw InvariantError("mlp needs at least an input and an output size");
    for (int s : sizes)
      if (s <= 0) throw InvariantError("mlp layer sizes must be positive");
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      const int in = sizes[l], out = sizes[l + 1];
      const double limit = std::sqrt(6.0 / (in + out));
      std::uniform_real_distribution<double> u(-limit, limit);
      DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
      for (int i = 0; i < out; ++i)
        for (int j = 0; j < in; ++j) layer.w(i, j) = u(rng);
      layers_.push_back(std::move(layer));
    }
  }

  /// Same shapes, all parameters zero (gradient accumulator).
  Mlp zeros_like() const {
    Mlp z = *this;
    for (auto& l : z.layers_) l.w.setZero(), l.b.setZero();
    return z;
  }

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }
  Eigen::Index input_size() const { return layers_.front().w.cols(); }
  Eigen::Index output_size() const { return layers_.back().w.rows(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.w.size() + l.b.size());
    return n;
  }

  /// Pointers to every parameter in a fixed order.
  std::vector<double*> parameters() {
    std::vector<double*> p;
    for (auto& l : layers_) {
      for (Eigen::Index k = 0; k < l.w.size(); ++k) p.push_back(l.w.data() + k);
      for (Eigen::Index k = 0; k < l.b.size(); ++k) p.push_back(l.b.data() + k);
    }
    return p;
  }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const {
    if (cache) cache->a.assign(1, x);
    Eigen::MatrixXd h = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Eigen::MatrixXd z = layers_[l].w * h;
      z.colwise() += layers_[l].b;
      apply(l + 1 == layers_.size() ? output_ : hidden_, z);
      h = std::move(z);
      if (cache) cache->a.push_back(h);
    }
    return h;
  }

  /// Accumulates dL/dparams into `grads` given dL/d(output); returns dL/dx.
  Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& grad_out, Mlp& grads) const {
    Eigen::MatrixXd d = grad_out;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const Eigen::MatrixXd& a = cache.a[l + 1];
      switch (l + 1 == layers_.size() ? output_ : hidden_) {
        case Activation::identity: break;
        case Activation::tanh: d.array() *= 1.0 - a.array().square(); break;
        case Activation::sigmoid: d.array() *= a.array() * (1.0 - a.array()); break;
      }
      grads.layers_[l].w.noalias() += d * cache.a[l].transpose();
      grads.layers_[l].b += d.rowwise().sum();
      d = layers_[l].w.transpose() * d;
    }
    return d;
  }

  /// this += scale * other
  void add_scaled(const Mlp& other, double scale) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      layers_[l].w += scale * other.layers_[l].w;
      layers_[l].b += scale * other.layers_[l].b;
    }
  }

  /// this <- rate * source + (1 - rate) * this
  void soft_update(const Mlp& source, double rate) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      layers_[l].w = rate * source.layers_[l].w + (1.0 - rate) * layers_[l].w;
      layers_[l].b = rate * source.layers_[l].b + (1.0 - rate) * layers_[l].b;
    }
  }

  double squared_norm() const {
    double n = 0.0;
    for (const auto& l : layers_) n += l.w.squaredNorm() + l.b.squaredNorm();
    return n;
  }

  bool all_finite() const {
    for (const auto& l : layers_)
      if (!l.w.allFinite() || !l.b.allFinite()) return false;
    return true;
  }

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  static void apply(Activation act, Eigen::MatrixXd& z) {
    switch (act) {
      case Activation::identity: break;
      case Activation::tanh: z = z.array().tanh(); break;
      case Activation::sigmoid:
        // Clamped so outputs stay strictly inside (0, 1) in double precision.
        z = 1.0 / (1.0 + (-z.array().max(-30.0).min(30.0)).exp());
        break;
    }
  }

  std::vector<DenseLayer> layers_;
  Activation hidden_ = Activation::tanh;
  Activation output_ = Activation::identity;
};

}  // namespace gridsafe
