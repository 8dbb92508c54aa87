#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

// Minimal dense linear algebra and randomness shared by every other module.
// All scalars are 64-bit doubles; dimensions in this project stay <= 64, so
// nothing here tries to be a BLAS.

namespace zial {

using Vector = std::vector<double>;

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    static Matrix identity(std::size_t n);
    static Matrix zero(std::size_t r, std::size_t c) { return Matrix(r, c, 0.0); }
};

bool all_finite(const Vector& v);
bool all_finite(const Matrix& m);

// Shift-stabilized softmax: subtracts the max score before exponentiating.
// Throws std::invalid_argument on empty input.
Vector softmax(const Vector& scores);

// Saturating gate nonlinearity; odd, bounded by [-1, 1].
double stable_tanh(double x);

// y = M v. Throws std::invalid_argument on dimension mismatch.
Vector matvec(const Matrix& M, const Vector& v);
// y = M^T v (the projection direction used by attention, W^T x).
Vector matvec_t(const Matrix& M, const Vector& v);
Matrix matmul(const Matrix& A, const Matrix& B);
Matrix transpose(const Matrix& M);

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);          // Euclidean norm
double norm_inf(const Vector& a);

// Counter-based pseudo-random stream. A (seed, stream_id) pair fully
// determines the draw sequence; draws are a keyed SplitMix64 walk, so
// streams can be handed to parallel workers without draw-order coupling.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t next_u64();
    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);   // [lo, hi)
    double normal();                        // standard normal, Box-Muller
    double normal(double mean, double stddev);

    // Derives an independent child stream; depends only on the parent's
    // key and child_id, never on how many draws were consumed.
    RngStream split(std::uint64_t child_id) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

  private:
    RngStream() = default;
    std::uint64_t seed_ = 0;
    std::uint64_t stream_id_ = 0;
    std::uint64_t state_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace zial
