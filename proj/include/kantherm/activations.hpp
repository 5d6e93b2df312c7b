// Scalar activation functions shared by the network implementations.
#pragma once

#include <cmath>

namespace kantherm {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// silu(x) = x * sigmoid(x). The fixed backbone of every KAN edge.
inline double silu(double x) { return x * sigmoid(x); }

inline double silu_prime(double x) {
    const double s = sigmoid(x);
    return s * (1.0 + x * (1.0 - s));
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

inline double relu_prime(double x) { return x > 0.0 ? 1.0 : 0.0; }

} // namespace kantherm
