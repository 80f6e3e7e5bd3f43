#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace yunet {

using Shape = std::vector<int>;

std::string shape_string(const Shape& shape);
std::size_t shape_volume(const Shape& shape);

/// Dense row-major array. Four-dimensional tensors use NCHW order.
template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;
    explicit BasicTensor(Shape shape, T fill = T{0})
        : shape_(std::move(shape)), data_(shape_volume(shape_), fill) {}
    BasicTensor(Shape shape, std::vector<T> values);

    const Shape& shape() const noexcept { return shape_; }
    int rank() const noexcept { return static_cast<int>(shape_.size()); }
    int dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }
    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    // NCHW accessors; rank must be 4.
    int n() const { return shape_[0]; }
    int c() const { return shape_[1]; }
    int h() const { return shape_[2]; }
    int w() const { return shape_[3]; }
    T& at(int n, int c, int y, int x) {
        return data_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
    }
    const T& at(int n, int c, int y, int x) const {
        return data_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
    }

    /// Pointer to the first element of sample n (rank >= 1).
    T* sample(int n) { return data_.data() + static_cast<std::size_t>(n) * (data_.size() / shape_[0]); }
    const T* sample(int n) const {
        return data_.data() + static_cast<std::size_t>(n) * (data_.size() / shape_[0]);
    }

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }
    void reshape(Shape shape);

    bool operator==(const BasicTensor& other) const = default;

private:
    Shape shape_;
    std::vector<T> data_;
};

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
    if (data_.size() != shape_volume(shape_)) {
        throw std::invalid_argument("tensor value count does not match shape " + shape_string(shape_));
    }
}

template <typename T>
void BasicTensor<T>::reshape(Shape shape) {
    if (shape_volume(shape) != data_.size()) {
        throw std::invalid_argument("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    shape_ = std::move(shape);
}

template <typename To, typename From>
BasicTensor<To> tensor_cast(const BasicTensor<From>& src) {
    BasicTensor<To> out(src.shape());
    for (std::size_t i = 0; i < src.size(); ++i) out[i] = static_cast<To>(src[i]);
    return out;
}

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

} // namespace yunet
