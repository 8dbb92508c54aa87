#include "zial/activation.hpp"

#include <cmath>
#include <stdexcept>

namespace zial {

namespace {
constexpr double kLeakySlope = 0.01;
}

double apply_activation(Activation act, double x) {
    switch (act) {
        case Activation::tanh: return std::tanh(x);
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::leaky_relu: return x > 0.0 ? x : kLeakySlope * x;
        case Activation::identity: return x;
    }
    throw std::logic_error("apply_activation: unhandled activation");
}

double activation_derivative(Activation act, double x) {
    switch (act) {
        case Activation::tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::leaky_relu: return x > 0.0 ? 1.0 : kLeakySlope;
        case Activation::identity: return 1.0;
    }
    throw std::logic_error("activation_derivative: unhandled activation");
}

Vector apply_activation(Activation act, const Vector& v) {
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = apply_activation(act, v[i]);
    return out;
}

Vector activation_derivative(Activation act, const Vector& v) {
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = activation_derivative(act, v[i]);
    return out;
}

bool activation_smooth_injective(Activation act) {
    return act == Activation::tanh || act == Activation::identity;
}

std::string activation_name(Activation act) {
    switch (act) {
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
        case Activation::leaky_relu: return "leaky_relu";
        case Activation::identity: return "identity";
    }
    return "?";
}

Activation activation_from_name(const std::string& name) {
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    if (name == "leaky_relu") return Activation::leaky_relu;
    if (name == "identity") return Activation::identity;
    throw std::invalid_argument("unknown activation: " + name);
}

}  // namespace zial
