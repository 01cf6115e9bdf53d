#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest/doctest.h>

#include <cmath>
#include <cstring>

#include "motedit/gradcheck.hpp"
#include "motedit/pmm.hpp"

using namespace motedit;

namespace {

constexpr AttentionConfig kSmall{20, 2};
constexpr int kLayers = 2;

struct Fixture {
    ParamStore ps;
    Tensor f_m;

    explicit Fixture(uint64_t seed) : ps(seed) {
        Rng rng(seed);
        init_pmm(ps, kSmall, kLayers, 2, rng);
        f_m = Tensor::normal({7, kSmall.model_dim}, rng);
    }
};

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    return a.same_shape(b) &&
           std::memcmp(a.data(), b.data(), a.numel() * sizeof(double)) == 0;
}

} // namespace

TEST_CASE("forward shapes and ranges") {
    Fixture fx(1);
    Graph g;
    PmmOutput out = pmm_forward(g, g.input(fx.f_m), kSmall, fx.ps, kLayers);
    CHECK(g.val(out.attention).rows() == PartDecomposition::kPartCount);
    CHECK(g.val(out.attention).cols() == 7);
    CHECK(g.val(out.aggregated).rows() == PartDecomposition::kPartCount);
    CHECK(g.val(out.editability).rows() == 7);
    CHECK(g.val(out.editability).cols() == PartDecomposition::kPartCount);
    CHECK(g.val(out.modulated).rows() == 7);
    CHECK(g.val(out.modulated).cols() == kSmall.model_dim);

    const Tensor& att = g.val(out.attention);
    for (int i = 0; i < att.rows(); ++i) {
        double row = 0;
        for (int t = 0; t < att.cols(); ++t) {
            CHECK(att.at(i, t) > 0.0);
            row += att.at(i, t);
        }
        CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
    }
    const Tensor& r = g.val(out.editability);
    for (size_t k = 0; k < r.numel(); ++k) {
        CHECK(r[k] > 0.0);
        CHECK(r[k] < 1.0);
    }
}

TEST_CASE("channel groups partition the feature dimension") {
    Tensor pg = part_group_matrix(kSmall.model_dim);
    CHECK(pg.rows() == PartDecomposition::kPartCount);
    CHECK(pg.cols() == kSmall.model_dim);
    for (int c = 0; c < pg.cols(); ++c) {
        double col = 0;
        for (int i = 0; i < pg.rows(); ++i) {
            CHECK((pg.at(i, c) == 0.0 || pg.at(i, c) == 1.0));
            col += pg.at(i, c);
        }
        CHECK(col == 1.0); // each channel belongs to exactly one part
    }
}

TEST_CASE("zero weights leave the features untouched") {
    Fixture fx(2);
    Graph g;
    Var fm = g.input(fx.f_m);
    Tensor zeros(7, PartDecomposition::kPartCount);
    zeros.fill(0.0);
    Var out = modulate(g, fm, g.input(zeros), fx.ps);
    CHECK(bitwise_equal(g.val(out), fx.f_m));
}

TEST_CASE("full weights add exactly the feature update") {
    Fixture fx(3);
    Tensor ones(7, PartDecomposition::kPartCount);
    ones.fill(1.0);

    Graph g;
    Var out = modulate(g, g.input(fx.f_m), g.input(ones), fx.ps);

    // reference composed through the identical op sequence, gate fixed at 1
    Graph ref;
    Var fv = ref.input(fx.f_m);
    Var gate = ref.matmul(ref.input(ones), ref.input(part_group_matrix(kSmall.model_dim)));
    Var want = ref.add(fv, ref.mul(gate, mlp(ref, fv, fx.ps, "pmm.mod")));
    CHECK(bitwise_equal(g.val(out), ref.val(want)));
}

TEST_CASE("loss fixture from hand-worked values") {
    // weights rise 0.2 / 0.4 / 0.6 over three frames, supervision sits 0.1 lower
    Tensor r(3, 5), s_bar(3, 5);
    for (int p = 0; p < 5; ++p) {
        r.at(0, p) = 0.2;
        r.at(1, p) = 0.4;
        r.at(2, p) = 0.6;
        for (int t = 0; t < 3; ++t) s_bar.at(t, p) = r.at(t, p) - 0.1;
    }
    Graph g;
    PmmLoss loss = pmm_loss(g, g.input(r), s_bar, 0.1);
    CHECK(std::fabs(g.val(loss.psm)[0] - 0.1) < 1e-12);
    CHECK(std::fabs(g.val(loss.smooth)[0] - 0.13333333333333333) < 1e-12);
    CHECK(std::fabs(g.val(loss.total)[0] - 0.11333333333333334) < 1e-12);
}

TEST_CASE("smoothness is invariant to time reversal") {
    Rng rng(5);
    Tensor r = Tensor::normal({6, 5}, rng);
    Tensor rev(6, 5);
    for (int t = 0; t < 6; ++t)
        for (int p = 0; p < 5; ++p) rev.at(t, p) = r.at(5 - t, p);
    Tensor s_bar(6, 5);
    s_bar.fill(0.0);
    Graph ga, gb;
    PmmLoss la = pmm_loss(ga, ga.input(r), s_bar, 0.1);
    PmmLoss lb = pmm_loss(gb, gb.input(rev), s_bar, 0.1);
    CHECK(std::fabs(ga.val(la.smooth)[0] - gb.val(lb.smooth)[0]) < 1e-12);
}

TEST_CASE("constant weights have zero smoothness penalty") {
    Tensor r(4, 5);
    r.fill(0.37);
    Tensor s_bar(4, 5);
    s_bar.fill(0.37);
    Graph g;
    PmmLoss loss = pmm_loss(g, g.input(r), s_bar, 0.1);
    CHECK(g.val(loss.psm)[0] == 0.0);
    CHECK(g.val(loss.smooth)[0] == 0.0);
    CHECK(g.val(loss.total)[0] == 0.0);
}

TEST_CASE("block and loss gradients agree with finite differences") {
    Fixture fx(6);
    fx.ps.create_from("in.motion", fx.f_m);
    Rng srng(60);
    Tensor s_bar = Tensor::normal({7, 5}, srng);
    for (size_t k = 0; k < s_bar.numel(); ++k) s_bar[k] = std::fabs(s_bar[k]) * 0.1;
    auto forward = [&](bool with_grad) {
        Graph g;
        PmmOutput out = pmm_forward(g, g.param(fx.ps, "in.motion"), kSmall, fx.ps, kLayers);
        PmmLoss pl = pmm_loss(g, out.editability, s_bar, 0.1);
        Var loss = g.add(g.mean(out.modulated), pl.total);
        if (with_grad) {
            fx.ps.zero_grads();
            g.backward(loss);
        }
        return g.val(loss)[0];
    };
    GradCheckReport rep = gradcheck(fx.ps, forward, 1e-5, 1e-5, 300, 13);
    INFO(rep.to_string());
    CHECK(rep.pass);
}
