#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "zial/moe.hpp"

#include "support.hpp"

using namespace zial;
using test::max_abs_diff;
using test::random_matrix;
using test::random_vector;

namespace {

MoeSystem random_system(std::size_t d, std::size_t d_k, std::size_t d_v, std::size_t N,
                        std::size_t L, RngStream& rng) {
    MoeSystem sys;
    sys.cfg.d = d;
    sys.cfg.d_k = d_k;
    sys.cfg.d_v = d_v;
    sys.cfg.N = N;
    sys.cfg.L = L;
    sys.cfg.W_Q = random_matrix(d, d_k, rng);
    sys.cfg.W_K = random_matrix(d, d_k, rng);
    sys.cfg.W_V = random_matrix(d, d_v, rng);
    std::vector<Vector> X;
    for (std::size_t i = 0; i < N; ++i) X.push_back(random_vector(d, rng));
    sys.bundle = TokenBundle::concat(X, random_vector(d, rng));
    for (std::size_t i = 0; i < L; ++i) sys.prompts.rows.push_back(random_vector(d, rng));
    sys.prompts.alpha = rng.uniform(-2.0, 2.0);
    return sys;
}

}  // namespace

TEST_CASE("token bundle selectors reproduce tokens bit-exactly") {
    RngStream rng(21, 0);
    const std::vector<Vector> X{random_vector(3, rng), random_vector(3, rng)};
    const Vector t = random_vector(3, rng);
    const TokenBundle b = TokenBundle::concat(X, t);

    CHECK(b.X_bar.size() == 9);
    for (std::size_t i = 1; i <= 2; ++i) {
        const Vector tok = b.token(i);
        for (std::size_t c = 0; c < 3; ++c) CHECK(tok[c] == X[i - 1][c]);
        // Dense E_i agrees with the slice exactly.
        CHECK(max_abs_diff(matvec(b.selector_dense(i), b.X_bar), tok) == 0.0);
    }
    const Vector last = b.token(3);
    for (std::size_t c = 0; c < 3; ++c) CHECK(last[c] == t[c]);
    CHECK(max_abs_diff(matvec(b.selector_dense(3), b.X_bar), last) == 0.0);

    CHECK_THROWS_AS(b.token(0), std::out_of_range);
    CHECK_THROWS_AS(b.token(4), std::out_of_range);
}

TEST_CASE("experts with identity W_V return the raw tokens") {
    RngStream rng(22, 0);
    MoeSystem sys = random_system(3, 3, 3, 2, 1, rng);
    sys.cfg.W_V = Matrix::identity(3);
    CHECK(max_abs_diff(expert_output(sys, 1), sys.bundle.token(1)) == 0.0);
    CHECK(max_abs_diff(expert_output(sys, 3), sys.bundle.token(3)) == 0.0);  // j = N+1 is t
    CHECK(max_abs_diff(expert_output(sys, 4), sys.prompts.rows[0]) == 0.0);
    CHECK_THROWS_AS(expert_output(sys, 0), std::out_of_range);
    CHECK_THROWS_AS(expert_output(sys, 5), std::out_of_range);
}

TEST_CASE("prompt expert matches a matvec oracle") {
    RngStream rng(23, 0);
    const MoeSystem sys = random_system(4, 3, 5, 2, 2, rng);
    const Vector f = expert_output(sys, sys.cfg.N + 2);
    CHECK(max_abs_diff(f, matvec(transpose(sys.cfg.W_V), sys.prompts.rows[0])) <= 1e-14);
}

TEST_CASE("degenerate blocks give unit gates") {
    RngStream rng(24, 0);
    const MoeSystem word_only = random_system(3, 3, 3, 0, 2, rng);
    CHECK(gate_weight(word_only, 1) == doctest::Approx(1.0).epsilon(1e-15));

    const MoeSystem single_prompt = random_system(3, 3, 3, 2, 1, rng);
    CHECK(gate_weight(single_prompt, 4) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("gates match a direct softmax of quadratic-form logits") {
    RngStream rng(25, 0);
    const MoeSystem sys = random_system(3, 2, 4, 2, 2, rng);

    // Oracle: logits via the dense selector route of the paper's notation.
    const Vector q = matvec(transpose(sys.cfg.W_Q),
                            matvec(sys.bundle.selector_dense(3), sys.bundle.X_bar));
    const double scale = 1.0 / std::sqrt(2.0);
    Vector word_logits(3), prompt_logits(2);
    for (std::size_t j = 1; j <= 3; ++j)
        word_logits[j - 1] =
            dot(q, matvec(transpose(sys.cfg.W_K), sys.bundle.token(j))) * scale;
    for (std::size_t j = 0; j < 2; ++j)
        prompt_logits[j] = dot(q, matvec(transpose(sys.cfg.W_K), sys.prompts.rows[j])) * scale;
    const Vector word_gates = softmax(word_logits);
    const Vector prompt_gates = softmax(prompt_logits);

    for (std::size_t j = 1; j <= 3; ++j)
        CHECK(std::fabs(gate_weight(sys, j) - word_gates[j - 1]) <= 1e-13);
    for (std::size_t j = 0; j < 2; ++j)
        CHECK(std::fabs(gate_weight(sys, 4 + j) - prompt_gates[j]) <= 1e-13);
}

TEST_CASE("gates normalize to one per block") {
    RngStream rng(26, 0);
    for (int trial = 0; trial < 30; ++trial) {
        RngStream r = rng.split(trial);
        const MoeSystem sys = random_system(1 + r.next_u64() % 6, 1 + r.next_u64() % 6,
                                            1 + r.next_u64() % 6, r.next_u64() % 5,
                                            1 + r.next_u64() % 4, r);
        double word_sum = 0.0, prompt_sum = 0.0;
        for (std::size_t j = 1; j <= sys.cfg.N + 1; ++j) {
            const double g = gate_weight(sys, j);
            CHECK(g > 0.0);
            CHECK(g < 1.0 + 1e-15);
            word_sum += g;
        }
        for (std::size_t j = sys.cfg.N + 2; j <= sys.cfg.N + 1 + sys.cfg.L; ++j)
            prompt_sum += gate_weight(sys, j);
        CHECK(std::fabs(word_sum - 1.0) <= 1e-12);
        CHECK(std::fabs(prompt_sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("alpha = 0 leaves only the word mixture") {
    RngStream rng(27, 0);
    MoeSystem sys = random_system(3, 3, 3, 2, 2, rng);
    sys.prompts.alpha = 0.0;
    Vector expect(sys.cfg.d_v, 0.0);
    for (std::size_t j = 1; j <= sys.cfg.N + 1; ++j) {
        const double g = gate_weight(sys, j);
        const Vector f = expert_output(sys, j);
        for (std::size_t c = 0; c < expect.size(); ++c) expect[c] += g * f[c];
    }
    CHECK(max_abs_diff(moe_output(sys), expect) <= 1e-14);
}

TEST_CASE("zero W_Q forces uniform gates in both blocks") {
    RngStream rng(28, 0);
    MoeSystem sys = random_system(3, 3, 4, 2, 3, rng);
    sys.cfg.W_Q = Matrix::zero(3, 3);

    Vector word_mean(4, 0.0), prompt_mean(4, 0.0);
    for (std::size_t j = 1; j <= 3; ++j) {
        const Vector f = expert_output(sys, j);
        for (std::size_t c = 0; c < 4; ++c) word_mean[c] += f[c] / 3.0;
    }
    for (std::size_t j = 4; j <= 6; ++j) {
        const Vector f = expert_output(sys, j);
        for (std::size_t c = 0; c < 4; ++c) prompt_mean[c] += f[c] / 3.0;
    }
    Vector expect(4);
    for (std::size_t c = 0; c < 4; ++c)
        expect[c] = word_mean[c] + std::tanh(sys.prompts.alpha) * prompt_mean[c];
    CHECK(max_abs_diff(moe_output(sys), expect) <= 1e-14);
}

TEST_CASE("moe output equals zero-init attention on random configs") {
    RngStream rng(29, 0);
    for (int trial = 0; trial < 25; ++trial) {
        RngStream r = rng.split(trial);
        const MoeSystem sys = random_system(1 + r.next_u64() % 8, 1 + r.next_u64() % 8,
                                            1 + r.next_u64() % 8, r.next_u64() % 5,
                                            1 + r.next_u64() % 3, r);
        std::vector<Vector> X;
        for (std::size_t i = 1; i <= sys.cfg.N; ++i) X.push_back(sys.bundle.token(i));
        const Vector via_attn =
            zero_init_attention(sys.bundle.token(sys.cfg.N + 1), X, sys.prompts, sys.cfg);
        CHECK(max_abs_diff(moe_output(sys), via_attn) <= 1e-10);
    }
}

TEST_CASE("check_equivalence: scalar case is exact to 1e-14") {
    RngStream rng(7, 0);
    EquivalenceBounds bounds;
    bounds.max_n = 0;
    bounds.max_l = 1;
    bounds.max_d = 1;
    const EquivalenceReport report = check_equivalence(1, bounds, rng);
    CHECK(report.trials == 1);
    CHECK(report.max_abs_deviation <= 1e-14);
}

TEST_CASE("check_equivalence: 100 randomized trials stay under 1e-10") {
    RngStream rng(7, 0);
    const EquivalenceReport report = check_equivalence(100, EquivalenceBounds{}, rng);
    CHECK(report.max_abs_deviation <= 1e-10);
}

TEST_CASE("all-zero inputs collapse both pipelines to zero") {
    MoeSystem sys;
    sys.cfg.d = 2;
    sys.cfg.d_k = 2;
    sys.cfg.d_v = 2;
    sys.cfg.N = 1;
    sys.cfg.L = 2;
    sys.cfg.W_Q = Matrix::zero(2, 2);
    sys.cfg.W_K = Matrix::zero(2, 2);
    sys.cfg.W_V = Matrix::zero(2, 2);
    sys.bundle = TokenBundle::concat({Vector(2, 0.0)}, Vector(2, 0.0));
    sys.prompts.rows = {Vector(2, 0.0), Vector(2, 0.0)};
    sys.prompts.alpha = 1.3;

    CHECK(norm_inf(moe_output(sys)) == 0.0);
    CHECK(norm_inf(zero_init_attention(sys.bundle.token(2), {sys.bundle.token(1)}, sys.prompts,
                                       sys.cfg)) == 0.0);
}

TEST_CASE("check_equivalence validates trial count") {
    RngStream rng(1, 0);
    CHECK_THROWS_AS(check_equivalence(0, EquivalenceBounds{}, rng), std::invalid_argument);
}
