#pragma once

#include "steinw/common.hpp"

#include <span>
#include <vector>

namespace steinw {

/// Dense order-k tensor over R^d, row-major (first index most significant).
class Tensor {
 public:
  static constexpr std::size_t kMaxEntries = std::size_t{1} << 30;

  Tensor() = default;
  Tensor(int order, int dim);

  /// v^{⊗k}.
  static Tensor outer_power(const Vector& v, int order);
  static Tensor identity(int dim);
  /// Wraps a vector as an order-1 tensor.
  static Tensor from_vector(const Vector& v);

  int order() const noexcept { return order_; }
  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }

  /// Entry at 0-based multi-index.
  double at(std::span<const int> index) const;
  std::size_t flat_index(std::span<const int> index) const;
  std::vector<int> multi_index(std::size_t flat) const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double scale);

  double dot(const Tensor& other) const;
  /// Hilbert–Schmidt norm.
  double norm() const;

  /// Applies `m` along every mode: (m ⊗ … ⊗ m) T.
  Tensor contract_each_mode(const Matrix& m) const;

 private:
  void check_compatible(const Tensor& other) const;

  int order_ = 0;
  int dim_ = 0;
  std::vector<double> data_;
};

std::size_t checked_power(int dim, int order);

}  // namespace steinw
