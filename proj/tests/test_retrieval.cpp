#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest/doctest.h>

#include <cmath>

#include "motedit/retrieval.hpp"

using namespace motedit;

namespace {

// N pairwise-orthogonal one-hot embeddings, query i matching gallery i
RetrievalInput one_hot_input(int n) {
    RetrievalInput in;
    in.queries = Tensor(n, n);
    in.gallery = Tensor(n, n);
    in.queries.fill(0.0);
    in.gallery.fill(0.0);
    for (int i = 0; i < n; ++i) {
        in.queries.at(i, i) = 1.0;
        in.gallery.at(i, i) = 1.0;
    }
    return in;
}

} // namespace

TEST_CASE("cosine similarity basics") {
    Tensor a(1, 3), b(1, 3), z(1, 3);
    a[0] = 1;
    a[1] = 0;
    a[2] = 0;
    b[0] = 0;
    b[1] = 2;
    b[2] = 0;
    z.fill(0.0);
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cosine_similarity(a, b) == 0.0);
    CHECK(cosine_similarity(a, z) == 0.0); // zero-norm guard
    Tensor neg = scale(a, -3.0);
    CHECK(cosine_similarity(a, neg) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("pooled embeddings average the frame features") {
    FrozenMotionCodec codec = FrozenMotionCodec::standard(256);
    MotionSequence m = MotionSequence::zeros(3, 20.0);
    m.at(0, 0) = 1.0;
    m.at(2, 5) = -2.0;
    Tensor f = codec.encode(m);
    Tensor pooled = pooled_embedding(codec, m);
    REQUIRE(pooled.rows() == 1);
    REQUIRE(pooled.cols() == 256);
    for (int d = 0; d < 256; ++d) {
        double mean = (f.at(0, d) + f.at(1, d) + f.at(2, d)) / 3.0;
        CHECK(pooled.at(0, d) == doctest::Approx(mean).epsilon(1e-15));
    }
}

TEST_CASE("perfectly matched embeddings rank first") {
    RetrievalInput in = one_hot_input(40);
    Rng rng(1);
    RetrievalMetrics m = evaluate_run(in, 0, rng);
    CHECK(m.r1 == 100.0);
    CHECK(m.r2 == 100.0);
    CHECK(m.r3 == 100.0);
    CHECK(m.avg_rank == 1.0);
    Rng rng2(2);
    RetrievalMetrics g = evaluate_run(in, 32, rng2); // one full gallery, 8 dropped
    CHECK(g.r1 == 100.0);
    CHECK(g.avg_rank == 1.0);
}

TEST_CASE("fully tied galleries average to the middle rank") {
    // queries orthogonal to every gallery row: all similarities are 0
    RetrievalInput in;
    int n = 64;
    in.queries = Tensor(n, 2 * n);
    in.gallery = Tensor(n, 2 * n);
    in.queries.fill(0.0);
    in.gallery.fill(0.0);
    for (int i = 0; i < n; ++i) {
        in.queries.at(i, i) = 1.0;
        in.gallery.at(i, n + i) = 1.0;
    }
    RetrievalRow row = evaluate_protocol(in, "batch32", "g2t", 50, 99);
    CHECK(row.runs == 50);
    // ties go to the earlier shuffled position, so the ranks within a tied
    // gallery are a permutation of 1..32 and every run averages to exactly
    // the middle
    CHECK(std::fabs(row.mean.avg_rank - 16.5) < 1e-12);
    CHECK(row.ci95 == 0.0);
}

TEST_CASE("worst match lands at the bottom rank") {
    // each query is anti-aligned with its own counterpart and orthogonal to
    // everything else, so the true item always ranks last
    int n = 8;
    RetrievalInput in;
    in.queries = Tensor(n, n);
    in.gallery = Tensor(n, n);
    in.queries.fill(0.0);
    in.gallery.fill(0.0);
    for (int i = 0; i < n; ++i) {
        in.queries.at(i, i) = 1.0;
        in.gallery.at(i, i) = -1.0;
    }
    Rng rng(3);
    RetrievalMetrics m = evaluate_run(in, 0, rng);
    CHECK(m.avg_rank == static_cast<double>(n));
    CHECK(m.r1 == 0.0);
    CHECK(m.r3 == 0.0);
}

TEST_CASE("protocol errors are loud") {
    RetrievalInput tiny = one_hot_input(8);
    CHECK_THROWS(evaluate_protocol(tiny, "batch32", "g2t", 1, 1)); // fewer than 32 pairs
    RetrievalInput two = one_hot_input(2);
    Rng rng(1);
    CHECK_THROWS(evaluate_run(two, 0, rng)); // gallery smaller than R@3
    CHECK_THROWS(evaluate_protocol(one_hot_input(40), "weekly", "g2t", 1, 1));
}

TEST_CASE("report CSV layout") {
    RetrievalInput in = one_hot_input(40);
    std::vector<RetrievalRow> rows{evaluate_protocol(in, "full", "g2t", 2, 5)};
    std::string csv = retrieval_report_csv(rows);
    CHECK(csv.rfind("protocol,direction,R1,R2,R3,AvgR,ci95\n", 0) == 0);
    CHECK(csv.find("full,g2t,100,100,100,1,0\n") != std::string::npos);
}

TEST_CASE("roc auc on hand fixtures") {
    CHECK(roc_auc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == 1.0);
    CHECK(roc_auc({0.1, 0.2, 0.8, 0.9}, {1, 1, 0, 0}) == 0.0);
    CHECK(roc_auc({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}) == 0.5);
    // one inversion among four: 1 of 4 pairs misordered
    CHECK(roc_auc({0.9, 0.6, 0.7, 0.1}, {1, 1, 0, 0}) == 0.75);
    CHECK_THROWS(roc_auc({0.1, 0.2}, {1, 1}));
    CHECK_THROWS(roc_auc({0.1, 0.2}, {1}));
}
