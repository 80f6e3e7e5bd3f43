#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "yunet/tensor.hpp"

namespace yunet {

/// Ordered collection of named arrays: network weights, their gradients, or
/// optimizer buffers. Insertion order is preserved and is the serialization order.
template <typename T>
class ParameterSet {
public:
    std::size_t add(std::string name, BasicTensor<T> value) {
        names_.push_back(std::move(name));
        tensors_.push_back(std::move(value));
        return tensors_.size() - 1;
    }

    std::size_t size() const noexcept { return tensors_.size(); }
    bool empty() const noexcept { return tensors_.empty(); }

    const std::string& name(std::size_t i) const { return names_.at(i); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    BasicTensor<T>& tensor(std::size_t i) { return tensors_.at(i); }
    const BasicTensor<T>& tensor(std::size_t i) const { return tensors_.at(i); }

    /// Index of the named entry or -1.
    long find(std::string_view name) const {
        for (std::size_t i = 0; i < names_.size(); ++i) {
            if (names_[i] == name) return static_cast<long>(i);
        }
        return -1;
    }

    std::size_t scalar_count() const {
        std::size_t total = 0;
        for (const auto& t : tensors_) total += t.size();
        return total;
    }

    ParameterSet zeros_like() const {
        ParameterSet out;
        for (std::size_t i = 0; i < size(); ++i) out.add(names_[i], BasicTensor<T>(tensors_[i].shape()));
        return out;
    }

    void zero() {
        for (auto& t : tensors_) t.fill(T{0});
    }

    /// Same names in the same order with identical shapes.
    bool same_layout(const ParameterSet& other) const {
        if (names_ != other.names_) return false;
        for (std::size_t i = 0; i < size(); ++i) {
            if (tensors_[i].shape() != other.tensors_[i].shape()) return false;
        }
        return true;
    }

    bool operator==(const ParameterSet&) const = default;

private:
    std::vector<std::string> names_;
    std::vector<BasicTensor<T>> tensors_;
};

} // namespace yunet
