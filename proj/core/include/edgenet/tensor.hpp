#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace edgenet {

inline std::string shape_to_string(const std::vector<int>& shape) {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

inline int64_t shape_numel(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

/// Dense n-dimensional array, row-major. The value type is a template
/// parameter so the same kernels can run in single or double precision.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        validate_shape();
        data_.assign(static_cast<size_t>(shape_numel(shape_)), T(0));
    }

    Tensor(std::vector<int> shape, std::vector<T> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        validate_shape();
        if (static_cast<int64_t>(data_.size()) != shape_numel(shape_)) {
            throw std::invalid_argument(
                "tensor data length " + std::to_string(data_.size()) +
                " does not match shape " + shape_to_string(shape_));
        }
    }

    static Tensor filled(std::vector<int> shape, T value) {
        Tensor t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), value);
        return t;
    }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int64_t size() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    T operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    // 3-D accessor for [C,H,W] tensors; test convenience, not a hot path.
    T& at(int c, int y, int x) {
        return data_[static_cast<size_t>((static_cast<int64_t>(c) * shape_[1] + y) * shape_[2] + x)];
    }
    T at(int c, int y, int x) const {
        return data_[static_cast<size_t>((static_cast<int64_t>(c) * shape_[1] + y) * shape_[2] + x)];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    bool all_finite() const {
        for (T v : data_) {
            if (!std::isfinite(static_cast<double>(v))) return false;
        }
        return true;
    }

    template <typename U>
    Tensor<U> cast() const {
        std::vector<U> out(data_.size());
        for (size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return Tensor<U>(shape_, std::move(out));
    }

private:
    void validate_shape() const {
        if (shape_.empty()) {
            throw std::invalid_argument("tensor shape must have at least one extent");
        }
        for (int d : shape_) {
            if (d <= 0) {
                throw std::invalid_argument("tensor extents must be positive, got " +
                                            shape_to_string(shape_));
            }
        }
    }

    std::vector<int> shape_;
    std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace edgenet
