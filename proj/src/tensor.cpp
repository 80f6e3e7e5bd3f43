#include "yunet/tensor.hpp"

namespace yunet {

std::string shape_string(const Shape& shape) {
    std::string out = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    return out + ")";
}

std::size_t shape_volume(const Shape& shape) {
    std::size_t v = 1;
    for (int d : shape) v *= static_cast<std::size_t>(d < 0 ? 0 : d);
    return shape.empty() ? 0 : v;
}

} // namespace yunet
