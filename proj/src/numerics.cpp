#include "zial/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace zial {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool all_finite(const Vector& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool all_finite(const Matrix& m) {
    return std::all_of(m.data.begin(), m.data.end(), [](double x) { return std::isfinite(x); });
}

Vector softmax(const Vector& scores) {
    if (scores.empty()) throw std::invalid_argument("softmax: empty score vector");
    const double shift = *std::max_element(scores.begin(), scores.end());
    Vector out(scores.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp(scores[i] - shift);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

double stable_tanh(double x) {
    return std::tanh(x);
}

Vector matvec(const Matrix& M, const Vector& v) {
    if (M.cols != v.size()) throw std::invalid_argument("matvec: dimension mismatch");
    Vector out(M.rows, 0.0);
    for (std::size_t r = 0; r < M.rows; ++r) {
        double acc = 0.0;
        const double* row = M.data.data() + r * M.cols;
        for (std::size_t c = 0; c < M.cols; ++c) acc += row[c] * v[c];
        out[r] = acc;
    }
    return out;
}

Vector matvec_t(const Matrix& M, const Vector& v) {
    if (M.rows != v.size()) throw std::invalid_argument("matvec_t: dimension mismatch");
    Vector out(M.cols, 0.0);
    for (std::size_t r = 0; r < M.rows; ++r) {
        const double* row = M.data.data() + r * M.cols;
        const double vr = v[r];
        for (std::size_t c = 0; c < M.cols; ++c) out[c] += row[c] * vr;
    }
    return out;
}

Matrix matmul(const Matrix& A, const Matrix& B) {
    if (A.cols != B.rows) throw std::invalid_argument("matmul: dimension mismatch");
    Matrix out(A.rows, B.cols, 0.0);
    for (std::size_t i = 0; i < A.rows; ++i) {
        for (std::size_t k = 0; k < A.cols; ++k) {
            const double a = A(i, k);
            if (a == 0.0) continue;
            for (std::size_t j = 0; j < B.cols; ++j) out(i, j) += a * B(k, j);
        }
    }
    return out;
}

Matrix transpose(const Matrix& M) {
    Matrix out(M.cols, M.rows);
    for (std::size_t r = 0; r < M.rows; ++r)
        for (std::size_t c = 0; c < M.cols; ++c) out(c, r) = M(r, c);
    return out;
}

double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

double norm_inf(const Vector& a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::fabs(x));
    return m;
}

namespace {

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream_id) {
    return mix64(mix64(seed + kGolden) ^ (stream_id * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), state_(derive_key(seed, stream_id)) {}

std::uint64_t RngStream::next_u64() {
    state_ += kGolden;
    return mix64(state_);
}

double RngStream::uniform() {
    // 53 high bits -> double in [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    // Box-Muller; u1 kept away from 0 so log stays finite.
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_normal_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

double RngStream::normal(double mean, double stddev) {
    return mean + stddev * normal();
}

RngStream RngStream::split(std::uint64_t child_id) const {
    RngStream child;
    child.seed_ = seed_;
    child.stream_id_ = mix64(stream_id_ * 0xA24BAED4963EE407ull + child_id + 1);
    child.state_ = derive_key(seed_, child.stream_id_);
    return child;
}

}  // namespace zial
