#include "steinw/tensor.hpp"

#include <cmath>

namespace steinw {

std::size_t checked_power(int dim, int order) {
  if (dim < 1) throw InvalidArgument("dim", "must be >= 1");
  if (order < 0) throw InvalidArgument("order", "must be >= 0");
  std::size_t n = 1;
  for (int i = 0; i < order; ++i) {
    if (n > Tensor::kMaxEntries / static_cast<std::size_t>(dim))
      throw SizeLimitError("tensor of order " + std::to_string(order) + " over dimension " +
                           std::to_string(dim) + " exceeds the dense size limit");
    n *= static_cast<std::size_t>(dim);
  }
  return n;
}

Tensor::Tensor(int order, int dim) : order_(order), dim_(dim), data_(checked_power(dim, order), 0.0) {}

Tensor Tensor::outer_power(const Vector& v, int order) {
  if (order < 1) throw InvalidArgument("order", "outer power needs order >= 1");
  const int d = static_cast<int>(v.size());
  Tensor out(order, d);
  out.data_[0] = 1.0;
  std::size_t filled = 1;
  // Kronecker expansion, one mode at a time, in place from the back.
  for (int m = 0; m < order; ++m) {
    for (std::size_t f = filled; f-- > 0;) {
      const double base = out.data_[f];
      for (int j = d; j-- > 0;) out.data_[f * d + j] = base * v[j];
    }
    filled *= d;
  }
  return out;
}

Tensor Tensor::identity(int dim) {
  Tensor out(2, dim);
  for (int j = 0; j < dim; ++j) out.data_[j * dim + j] = 1.0;
  return out;
}

Tensor Tensor::from_vector(const Vector& v) {
  Tensor out(1, static_cast<int>(v.size()));
  for (int j = 0; j < v.size(); ++j) out.data_[j] = v[j];
  return out;
}

std::size_t Tensor::flat_index(std::span<const int> index) const {
  if (static_cast<int>(index.size()) != order_) throw InvalidArgument("index", "length must equal tensor order");
  std::size_t flat = 0;
  for (int c : index) {
    if (c < 0 || c >= dim_) throw InvalidArgument("index", "coordinate out of range");
    flat = flat * dim_ + c;
  }
  return flat;
}

double Tensor::at(std::span<const int> index) const { return data_[flat_index(index)]; }

std::vector<int> Tensor::multi_index(std::size_t flat) const {
  std::vector<int> idx(order_);
  for (int m = order_; m-- > 0;) {
    idx[m] = static_cast<int>(flat % dim_);
    flat /= dim_;
  }
  return idx;
}

void Tensor::check_compatible(const Tensor& other) const {
  if (other.order_ != order_ || other.dim_ != dim_)
    throw InvalidArgument("tensor", "order/dimension mismatch");
}

Tensor& Tensor::operator+=(const Tensor& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double scale) {
  for (double& x : data_) x *= scale;
  return *this;
}

double Tensor::dot(const Tensor& other) const {
  check_compatible(other);
  double s = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) s += data_[i] * other.data_[i];
  return s;
}

double Tensor::norm() const { return std::sqrt(dot(*this)); }

Tensor Tensor::contract_each_mode(const Matrix& m) const {
  if (m.rows() != dim_ || m.cols() != dim_) throw InvalidArgument("matrix", "must be d x d");
  Tensor cur = *this;
  Tensor next(order_, dim_);
  std::size_t outer = 1;
  std::size_t inner = data_.size();
  for (int mode = 0; mode < order_; ++mode) {
    inner /= dim_;
    std::fill(next.data_.begin(), next.data_.end(), 0.0);
    for (std::size_t o = 0; o < outer; ++o)
      for (int a = 0; a < dim_; ++a)
        for (int b = 0; b < dim_; ++b) {
          const double w = m(a, b);
          if (w == 0.0) continue;
          const double* src = &cur.data_[(o * dim_ + b) * inner];
          double* dst = &next.data_[(o * dim_ + a) * inner];
          for (std::size_t i = 0; i < inner; ++i) dst[i] += w * src[i];
        }
    std::swap(cur.data_, next.data_);
    outer *= dim_;
  }
  return cur;
}

}  // namespace steinw
