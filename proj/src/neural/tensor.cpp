#include "d2c/neural/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "d2c/error.hpp"

namespace d2c::nn {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols)
    throw Error(ErrorKind::shape, "tensor data has " + std::to_string(data_.size()) +
                                      " values, shape needs " + std::to_string(rows * cols));
}

Tensor::Tensor(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error(ErrorKind::shape, "ragged tensor literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::add_inplace(const Tensor& other) {
  if (other.rows_ != rows_ || other.cols_ != cols_)
    throw Error(ErrorKind::shape, "add_inplace shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

}  // namespace d2c::nn
