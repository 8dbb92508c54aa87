#pragma once

#include <string>

#include "zial/numerics.hpp"

namespace zial {

// Elementwise nonlinearities shared by the MLP prompt transform and the
// nonlinear regression model. leaky_relu uses a fixed 0.01 slope.
enum class Activation { tanh, relu, leaky_relu, identity };

double apply_activation(Activation act, double x);
double activation_derivative(Activation act, double x);

Vector apply_activation(Activation act, const Vector& v);
Vector activation_derivative(Activation act, const Vector& v);

// True for activations that are injective and twice differentiable
// (tanh, identity); gradient-based fitting requires one of these.
bool activation_smooth_injective(Activation act);

std::string activation_name(Activation act);
Activation activation_from_name(const std::string& name);  // throws on unknown name

}  // namespace zial
