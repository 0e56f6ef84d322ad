#include "idwattn/attention.hpp"
#include "idwattn/error.hpp"
#include "idwattn/gradcheck.hpp"
#include "idwattn/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace idw;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = scale * (2.0 * rng.uniform() - 1.0);
    return m;
}

const ScoreKind kAllKinds[] = {
    ScoreKind::scaled_dot(),  ScoreKind::neg_dist(),    ScoreKind::gauss_dist(1.0),
    ScoreKind::inv_dist(2.0, 1e-3), ScoreKind::neglog_dist(2.0, 1e-3),
};

} // namespace

TEST_CASE("score values match the definitions") {
    const Matrix z1 = Matrix::of({{0.0}});
    const Matrix z2 = Matrix::of({{1.0}});

    CHECK(score(ScoreKind::neg_dist(), z1, 2)(0, 0) == 0.0);
    CHECK(score(ScoreKind::neg_dist(), z2, 2)(0, 0) == -1.0);
    CHECK(score(ScoreKind::inv_dist(2.0, 1e-3), z2, 2)(0, 0) ==
          doctest::Approx(1.0 / 1.001).epsilon(1e-12));
    CHECK(score(ScoreKind::gauss_dist(1.0), z2, 2)(0, 0) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    // eps -> 0+: -log(eps + 1) -> 0 at D = 1
    CHECK(std::abs(score(ScoreKind::neglog_dist(2.0, 1e-12), z2, 2)(0, 0)) < 1e-9);
}

TEST_CASE("score rejects negative squared distances and keeps output finite") {
    CHECK_THROWS_AS(score(ScoreKind::neg_dist(), Matrix::of({{-1.0}}), 2), ValueError);
}

TEST_CASE("scaled dot score divides by sqrt(d)") {
    const Matrix dot = Matrix::of({{3.0}});
    CHECK(score(ScoreKind::scaled_dot(), dot, 9)(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("softmax of equal scores is uniform") {
    const Matrix w = softmax_rows(Matrix::of({{0.0, 0.0}}));
    CHECK(w(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(w(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("softmax is overflow-safe via max subtraction") {
    const Matrix w = softmax_rows(Matrix::of({{1000.0, 0.0}}));
    CHECK(w(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w(0, 1) >= 0.0);
    CHECK(w.all_finite());
}

TEST_CASE("softmax matches the unstabilized formula at small magnitudes") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix s = random_matrix(1, 6, rng, 2.0);
        const Matrix w = softmax_rows(s);
        double denom = 0.0;
        for (std::size_t c = 0; c < 6; ++c) denom += std::exp(s(0, c));
        for (std::size_t c = 0; c < 6; ++c)
            CHECK(std::abs(w(0, c) - std::exp(s(0, c)) / denom) < 1e-12);
    }
}

TEST_CASE("idw_weights: symmetric ties and direct evaluation") {
    const Matrix tie = idw_weights(Matrix::of({{1.0, 1.0}}), 2.0, 1e-3);
    CHECK(tie(0, 0) == doctest::Approx(0.5).epsilon(1e-15));

    // D = [0, 1]: reciprocals are [1000, 1/1.001]
    const Matrix w = idw_weights(Matrix::of({{0.0, 1.0}}), 2.0, 1e-3);
    const double r0 = 1000.0, r1 = 1.0 / 1.001;
    CHECK(w(0, 0) == doctest::Approx(r0 / (r0 + r1)).epsilon(1e-12));
    CHECK(w(0, 1) == doctest::Approx(r1 / (r0 + r1)).epsilon(1e-12));
}

TEST_CASE("idw_weights equals softmax of the negative-log score") {
    Rng rng(33);
    for (int trial = 0; trial < 200; ++trial) {
        Matrix sq(1, 5);
        for (std::size_t c = 0; c < 5; ++c) {
            const double d = 0.01 + 3.0 * rng.uniform();
            sq(0, c) = d * d;
        }
        const double p = 1.0 + 3.0 * rng.uniform();
        const double eps = 1e-4 + 0.1 * rng.uniform();
        const Matrix direct = idw_weights(sq, p, eps);
        const Matrix via_softmax = softmax_rows(score(ScoreKind::neglog_dist(p, eps), sq, 2));
        for (std::size_t c = 0; c < 5; ++c)
            CHECK(std::abs(direct(0, c) - via_softmax(0, c)) < 1e-12);
    }
}

TEST_CASE("attention weight rows are stochastic for every kind") {
    Rng rng(44);
    for (const ScoreKind& kind : kAllKinds) {
        const Matrix q = random_matrix(4, 3, rng);
        const Matrix keys = random_matrix(6, 3, rng);
        const Matrix values = random_matrix(6, 2, rng);
        const AttentionOut out = attend(kind, q, keys, values);
        for (std::size_t b = 0; b < 4; ++b) {
            double sum = 0.0;
            for (std::size_t i = 0; i < 6; ++i) {
                CHECK(out.weights(b, i) >= 0.0);
                sum += out.weights(b, i);
            }
            CHECK(std::abs(sum - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("single prototype gets weight one regardless of distance") {
    const Matrix q = Matrix::of({{5.0, -3.0}});
    const Matrix keys = Matrix::of({{100.0, 100.0}});
    const Matrix values = Matrix::of({{2.0, -7.0, 0.5}});
    for (const ScoreKind& kind : kAllKinds) {
        const AttentionOut out = attend(kind, q, keys, values);
        CHECK(out.weights(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(out.output(0, c) == doctest::Approx(values(0, c)).epsilon(1e-15));
    }
}

TEST_CASE("equidistant keys average their value rows") {
    const Matrix q = Matrix::of({{0.0, 0.0}});
    const Matrix keys = Matrix::of({{1.0, 0.0}, {-1.0, 0.0}});
    const Matrix values = Matrix::of({{4.0, 0.0}, {0.0, 2.0}});
    for (const ScoreKind& kind : kAllKinds) {
        if (!kind.distance_based()) continue;
        const AttentionOut out = attend(kind, q, keys, values);
        CHECK(out.output(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(out.output(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("IDW puts nearly all weight on a coincident key") {
    // q sits exactly on the first key; the other key is at distance >= 1.
    const Matrix q = Matrix::of({{0.5, 0.5}});
    const Matrix keys = Matrix::of({{0.5, 0.5}, {1.5, 0.5}});
    const Matrix values = Matrix::of({{1, 0}, {0, 1}});
    const AttentionOut out = attend(ScoreKind::neglog_dist(2.0, 1e-3), q, keys, values);
    CHECK(out.weights(0, 0) >= 0.999);

    Matrix far = keys;
    far(1, 0) = 3.0; // push the competitor farther; the floor only improves
    CHECK(attend(ScoreKind::neglog_dist(2.0, 1e-3), q, far, values).weights(0, 0) >= 0.999);
}

TEST_CASE("two keys at distance one each take weight one-half, every distance kind") {
    // The anchor: with both keys at distance 1, symmetry forces 0.5/0.5.
    const Matrix q = Matrix::of({{0.0, 0.0}});
    const Matrix keys = Matrix::of({{1.0, 0.0}, {0.0, 1.0}});
    const Matrix values = Matrix::of({{1.0, 0.0}, {0.0, 1.0}});
    for (const ScoreKind& kind : kAllKinds) {
        if (!kind.distance_based()) continue;
        const AttentionOut out = attend(kind, q, keys, values);
        CHECK(out.weights(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(out.weights(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
    }
}

TEST_CASE("distance-based weights are translation invariant; scaled dot is not") {
    Rng rng(55);
    const Matrix q = random_matrix(3, 2, rng);
    const Matrix keys = random_matrix(5, 2, rng);
    const Matrix values = random_matrix(5, 2, rng);
    Matrix qt = q, kt = keys;
    for (std::size_t r = 0; r < qt.rows(); ++r) {
        qt(r, 0) += 2.0;
        qt(r, 1) -= 3.0;
    }
    for (std::size_t r = 0; r < kt.rows(); ++r) {
        kt(r, 0) += 2.0;
        kt(r, 1) -= 3.0;
    }
    for (const ScoreKind& kind : kAllKinds) {
        const AttentionOut a = attend(kind, q, keys, values);
        const AttentionOut b = attend(kind, qt, kt, values);
        double max_diff = 0.0;
        for (std::size_t i = 0; i < a.weights.size(); ++i)
            max_diff = std::max(max_diff, std::abs(a.weights.data()[i] - b.weights.data()[i]));
        if (kind.distance_based())
            CHECK(max_diff < 1e-9);
        else
            CHECK(max_diff > 1e-6); // a counterexample exists
    }
}

TEST_CASE("IDW weight of a key strictly decreases as its distance grows") {
    Matrix sq = Matrix::of({{0.25, 1.0, 2.0}});
    double prev = idw_weights(sq, 2.0, 1e-3)(0, 0);
    for (double d = 0.6; d < 3.0; d += 0.4) {
        sq(0, 0) = d * d;
        const double w = idw_weights(sq, 2.0, 1e-3)(0, 0);
        CHECK(w < prev);
        prev = w;
    }
}

TEST_CASE("voronoi limit: large p concentrates on the nearest key") {
    const Matrix w = voronoi_limit(Matrix::of({{1.0, 4.0}}), 64.0, 1e-9); // D = [1, 2]
    CHECK(w(0, 0) > 1.0 - 1e-6);

    const Matrix tie = voronoi_limit(Matrix::of({{1.0, 1.0}}), 64.0, 1e-9);
    CHECK(tie(0, 0) == doctest::Approx(0.5).epsilon(1e-15));

    const Matrix three = voronoi_limit(Matrix::of({{0.25, 1.0, 4.0}}), 64.0, 1e-9);
    CHECK(three.row_argmax(0) == 0);
}

TEST_CASE("attend_backward: zero upstream gradient gives zero gradients") {
    Rng rng(66);
    const Matrix q = random_matrix(2, 3, rng);
    const Matrix keys = random_matrix(4, 3, rng);
    const Matrix values = random_matrix(4, 2, rng);
    for (const ScoreKind& kind : kAllKinds) {
        const AttentionOut out = attend(kind, q, keys, values);
        const AttendGrads g = attend_backward(kind, q, keys, values, out, Matrix(2, 2));
        CHECK(g.query == Matrix(2, 3));
        CHECK(g.keys == Matrix(4, 3));
        CHECK(g.values == Matrix(4, 2));
    }
}

TEST_CASE("attend_backward: value gradient is weights^T grad_output exactly") {
    Rng rng(77);
    const Matrix q = random_matrix(3, 2, rng);
    const Matrix keys = random_matrix(4, 2, rng);
    const Matrix values = random_matrix(4, 3, rng);
    const Matrix grad_out = random_matrix(3, 3, rng);
    for (const ScoreKind& kind : kAllKinds) {
        const AttentionOut out = attend(kind, q, keys, values);
        const AttendGrads g = attend_backward(kind, q, keys, values, out, grad_out);
        CHECK(g.values == matmul(out.weights.transposed(), grad_out));
    }
}

TEST_CASE("attend_backward matches central finite differences for every kind") {
    Rng rng(88);
    for (const ScoreKind& kind : kAllKinds) {
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t b = 1 + rng.below(3), p = 1 + rng.below(4);
            const std::size_t d = 1 + rng.below(5), c = 1 + rng.below(3);
            Matrix q = random_matrix(b, d, rng, 0.8);
            Matrix keys = random_matrix(p, d, rng, 0.8);
            Matrix values = random_matrix(p, c, rng);
            const Matrix grad_out = random_matrix(b, c, rng);

            const AttentionOut out = attend(kind, q, keys, values);
            const AttendGrads analytic = attend_backward(kind, q, keys, values, out, grad_out);

            auto loss = [&]() {
                const AttentionOut o = attend(kind, q, keys, values);
                double j = 0.0;
                for (std::size_t i = 0; i < o.output.size(); ++i)
                    j += grad_out.data()[i] * o.output.data()[i];
                return j;
            };
            const auto report = compare_grads(loss, {&q, &keys, &values},
                                              {"query", "keys", "values"},
                                              {analytic.query, analytic.keys, analytic.values});
            CHECK(report.max_rel_err < 1e-4);
        }
    }
}
