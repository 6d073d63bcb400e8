#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ctal/errors.hpp"

namespace ctal {

using Index = Eigen::Index;

template <typename S>
using VecX = Eigen::Array<S, Eigen::Dynamic, 1>;

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::string shape_str(const std::vector<Index>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << "]";
  return os.str();
}

// Dense row-major tensor. Rank is arbitrary but the op library treats
// everything as a matrix of (numel/last_dim) x last_dim; rank-1 tensors map
// to a single row. The gradient buffer, when present, mirrors the data shape.
template <typename S>
class Tensor {
public:
  Tensor() = default;

  explicit Tensor(std::vector<Index> shape) : shape_(std::move(shape)) {
    data_ = VecX<S>::Zero(numel_of(shape_));
  }

  Tensor(std::vector<Index> shape, VecX<S> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != numel_of(shape_))
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_str(shape_));
  }

  static Tensor zeros(std::vector<Index> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<Index> shape, S v) {
    Tensor t(std::move(shape));
    t.data_.setConstant(v);
    return t;
  }

  static Tensor scalar(S v) { return full({1}, v); }

  static Tensor from_matrix(const MatX<S>& m) {
    Tensor t({m.rows(), m.cols()});
    t.mat() = m;
    return t;
  }

  static Tensor row(std::initializer_list<S> xs) {
    Tensor t({static_cast<Index>(xs.size())});
    Index i = 0;
    for (S x : xs) t.data_[i++] = x;
    return t;
  }

  const std::vector<Index>& shape() const { return shape_; }
  Index numel() const { return data_.size(); }
  Index rank() const { return static_cast<Index>(shape_.size()); }

  // Matrix view: all leading dims collapse into rows, last dim is columns.
  Index cols() const { return shape_.empty() ? 0 : shape_.back(); }
  Index rows() const { return cols() == 0 ? 0 : numel() / cols(); }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }
  VecX<S>& flat() { return data_; }
  const VecX<S>& flat() const { return data_; }

  Eigen::Map<MatX<S>> mat() { return {data_.data(), rows(), cols()}; }
  Eigen::Map<const MatX<S>> mat() const { return {data_.data(), rows(), cols()}; }

  S& at(Index r, Index c) { return data_[r * cols() + c]; }
  S at(Index r, Index c) const { return data_[r * cols() + c]; }
  S& operator[](Index i) { return data_[i]; }
  S operator[](Index i) const { return data_[i]; }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool b) { requires_grad_ = b; }

  bool has_grad() const { return grad_.has_value(); }
  VecX<S>& grad() {
    if (!grad_) grad_ = VecX<S>::Zero(data_.size());
    return *grad_;
  }
  const VecX<S>& grad() const {
    if (!grad_) throw Error("tensor has no gradient buffer");
    return *grad_;
  }
  void zero_grad() {
    if (grad_) grad_->setZero();
  }
  void drop_grad() { grad_.reset(); }

  bool all_finite() const { return data_.isFinite().all(); }

  template <typename T>
  Tensor<T> cast() const {
    Tensor<T> out(shape_);
    out.flat() = data_.template cast<T>();
    return out;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  static Index numel_of(const std::vector<Index>& shape) {
    if (shape.empty()) return 0;
    Index n = 1;
    for (Index d : shape) {
      if (d < 0) throw DimensionError("negative dimension in shape " + shape_str(shape));
      n *= d;
    }
    return n;
  }

private:
  std::vector<Index> shape_;
  VecX<S> data_;
  bool requires_grad_ = false;
  std::optional<VecX<S>> grad_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace ctal
