#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pda/diff/graph.hpp"

namespace pda::diff {

enum class Activation { relu, tanh };

/// Smallest argument passed to a logarithm; anything below is treated as this value.
inline constexpr double kLogFloor = 1e-12;

/// x[batch x in] * weight[in x out] + bias[out].
Var affine(Var x, Var weight, Var bias);

/// relu has subgradient 0 at the kink.
Var activation(Var x, Activation kind);
Var relu(Var x);
Var tanh(Var x);
Var sigmoid(Var x);

/// Softmax of a vector, or of each row of a matrix. Max-subtracted.
Var softmax(Var x);

/// Natural log of max(x, floor); the gradient is zero where the floor is active.
Var log(Var x, double floor = kLogFloor);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);
Var add_scalar(Var x, double offset);
Var square(Var x);

Var sum(Var x);
Var mean(Var x);

/// Identity forward; multiplies the incoming gradient by -lambda.
Var reverse_gradient(Var x, double lambda);

Var reshape(Var x, Shape shape);
Var gather_rows(Var x, std::span<const std::size_t> rows);
Var concat_rows(Var top, Var bottom);
/// Column-wise mean of a matrix, as a vector.
Var mean_rows(Var x);
/// out[i] = x[i, columns[i]].
Var pick(Var x, std::span<const int> columns);
/// Euclidean norm of all entries; subgradient 0 at the origin.
Var l2_norm(Var x);
/// Sum over ordered pairs i != j of squared row distances.
Var sum_pairwise_sq_dist(Var x);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(Var a, double c) { return scale(a, c); }
inline Var operator*(double c, Var a) { return scale(a, c); }
inline Var operator-(Var a) { return scale(a, -1.0); }

}  // namespace pda::diff
