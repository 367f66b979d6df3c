#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bridgeout/errors.hpp"
#include "bridgeout/matrix.hpp"
#include "bridgeout/regularizers.hpp"
#include "bridgeout/rng.hpp"

using namespace bridgeout;

TEST_CASE("config validation") {
    CHECK_THROWS_AS(RegularizerConfig::dropout(0.0), ConfigError);
    CHECK_THROWS_AS(RegularizerConfig::dropout(1.2), ConfigError);
    CHECK_THROWS_AS(RegularizerConfig::shakeout(1.0, 0.3), ConfigError);
    CHECK_THROWS_AS(RegularizerConfig::shakeout(0.5, -0.1), ConfigError);
    CHECK_THROWS_AS(RegularizerConfig::bridgeout(0.5, 0.0), ConfigError);
    CHECK_NOTHROW(RegularizerConfig::dropout(1.0));
    CHECK_NOTHROW(RegularizerConfig::bridgeout(0.5, 0.5));
}

TEST_CASE("sample_masks populates exactly one member") {
    RngStream rng(1, 1);
    MaskSet none = sample_masks(RegularizerConfig::none(), 3, 4, rng);
    CHECK(none.empty());

    MaskSet drop = sample_masks(RegularizerConfig::dropout(0.5), 3, 4, rng);
    CHECK(drop.unit_mask.rows() == 1);
    CHECK(drop.unit_mask.cols() == 4);
    CHECK(drop.weight_mask.empty());

    MaskSet bo = sample_masks(RegularizerConfig::bridgeout(0.5, 1.0), 3, 4, rng);
    CHECK(bo.unit_mask.empty());
    CHECK(bo.weight_mask.rows() == 3);
    CHECK(bo.weight_mask.cols() == 4);
    for (std::size_t i = 0; i < bo.weight_mask.size(); ++i) {
        const double v = bo.weight_mask[i];
        CHECK((v == 0.0 || v == 1.0));
    }
}

TEST_CASE("perturb_dropout column scaling") {
    Matrix w{{1.0, 7.0}, {2.0, 8.0}};
    Matrix kept = perturb_dropout(w, Matrix{{1.0, 0.0}}, 0.5);
    CHECK(kept(0, 0) == 2.0);
    CHECK(kept(1, 0) == 4.0);
    CHECK(kept(0, 1) == 0.0);
    CHECK(kept(1, 1) == 0.0);

    Matrix unchanged = perturb_dropout(w, Matrix{{1.0, 1.0}}, 1.0);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(unchanged[i] == w[i]);

    CHECK_THROWS_AS(perturb_dropout(w, Matrix{{1.0}}, 0.5), ShapeError);
}

TEST_CASE("perturb_shakeout published branch values") {
    Matrix w{{0.4}};
    CHECK(perturb_shakeout(w, Matrix{{0.0}}, 0.5, 0.3, false)[0] == doctest::Approx(-0.3));
    CHECK(perturb_shakeout(w, Matrix{{1.0}}, 0.5, 0.3, false)[0] == doctest::Approx(1.4));
    // Unbiased variant replaces the kept increment with c(1-p)/p.
    CHECK(perturb_shakeout(w, Matrix{{1.0}}, 0.5, 0.3, true)[0] == doctest::Approx(1.1));
    CHECK_THROWS_AS(perturb_shakeout(w, Matrix{{1.0}}, 1.0, 0.3, false), ConfigError);
}

TEST_CASE("shakeout with c=0 degenerates to dropout") {
    RngStream rng(5, 2);
    Matrix w = sample_gaussian(4, 6, rng);
    Matrix mask = sample_bernoulli(1, 6, 0.5, rng);
    Matrix so = perturb_shakeout(w, mask, 0.5, 0.0, false);
    Matrix doo = perturb_dropout(w, mask, 0.5);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(so[i] == doctest::Approx(doo[i]));
}

TEST_CASE("perturb_bridgeout branch values") {
    Matrix w{{0.25}};
    Matrix dropped = perturb_bridgeout(w, Matrix{{0.0}}, 0.5, 1.0);
    CHECK(dropped[0] == doctest::Approx(-0.25));
    Matrix kept = perturb_bridgeout(w, Matrix{{1.0}}, 0.5, 1.0);
    CHECK(kept[0] == doctest::Approx(0.75));

    // q=2 with a dropped mask subtracts |w|, it does not zero the weight.
    Matrix neg{{-3.0}};
    CHECK(perturb_bridgeout(neg, Matrix{{0.0}}, 0.5, 2.0)[0] == doctest::Approx(-6.0));

    CHECK_THROWS_AS(perturb_bridgeout(w, Matrix(2, 2), 0.5, 1.0), ShapeError);
}

TEST_CASE("bridgeout p=1 is the identity under an all-ones mask") {
    RngStream rng(8, 3);
    Matrix w = sample_gaussian(5, 5, rng);
    Matrix ones = Matrix::full(5, 5, 1.0);
    Matrix out = perturb_bridgeout(w, ones, 1.0, 0.7);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(out[i] == w[i]);
}

TEST_CASE("bridgeout grad factor spot values") {
    Matrix w{{0.6}};
    // q=2: factor is 1 + (M/p - 1) sgn(w).
    CHECK(bridgeout_weight_grad_factor(w, Matrix{{1.0}}, 0.5, 2.0, 1e-8)[0] ==
          doctest::Approx(2.0));
    Matrix zero{{0.0}};
    CHECK(bridgeout_weight_grad_factor(zero, Matrix{{1.0}}, 0.5, 2.0, 1e-8)[0] == 1.0);
    CHECK(bridgeout_weight_grad_factor(zero, Matrix{{0.0}}, 0.5, 0.5, 1e-8)[0] == 1.0);
}

TEST_CASE("bridgeout grad factor matches finite differences of the perturbation") {
    RngStream rng(21, 4);
    const double p = 0.5, q = 1.3, h = 1e-6;
    Matrix w = sample_gaussian(6, 6, rng);
    Matrix mask = sample_bernoulli(6, 6, p, rng);
    Matrix factor = bridgeout_weight_grad_factor(w, mask, p, q, 1e-8);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (std::fabs(w[i]) < 1e-3) continue;
        Matrix wp = w, wm = w;
        wp[i] += h;
        wm[i] -= h;
        const double num = (perturb_bridgeout(wp, mask, p, q)[i] -
                            perturb_bridgeout(wm, mask, p, q)[i]) /
                           (2.0 * h);
        CHECK(factor[i] == doctest::Approx(num).epsilon(1e-6));
    }
}

TEST_CASE("expected perturbation closed forms") {
    RngStream rng(31, 5);
    Matrix w = sample_gaussian(3, 4, rng);

    Matrix e_bo = expected_perturbation(RegularizerConfig::bridgeout(0.3, 0.8), w);
    Matrix e_do = expected_perturbation(RegularizerConfig::dropout(0.6), w);
    for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(e_bo[i] == w[i]);
        CHECK(e_do[i] == w[i]);
    }

    const double p = 0.5, c = 0.3;
    Matrix e_so = expected_perturbation(RegularizerConfig::shakeout(p, c, false), w);
    const double shift = c * (p / (1.0 - p) - (1.0 - p));
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double s = w[i] > 0.0 ? 1.0 : (w[i] < 0.0 ? -1.0 : 0.0);
        CHECK(e_so[i] == doctest::Approx(w[i] + shift * s));
    }

    Matrix e_sou = expected_perturbation(RegularizerConfig::shakeout(p, c, true), w);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(e_sou[i] == w[i]);
}

TEST_CASE("shakeout Monte-Carlo mean matches the closed-form expectation") {
    RngStream rng(77, 6);
    const double p = 0.5, c = 0.3;
    Matrix w{{0.8, -0.5}, {1.2, -0.1}};
    const auto cfg = RegularizerConfig::shakeout(p, c, false);
    Matrix expect = expected_perturbation(cfg, w);

    const std::size_t draws = 1000000;
    Matrix acc(w.rows(), w.cols());
    Matrix acc_sq(w.rows(), w.cols());
    for (std::size_t s = 0; s < draws; ++s) {
        Matrix mask = sample_bernoulli(1, w.cols(), p, rng);
        Matrix wt = perturb_shakeout(w, mask, p, c, false);
        for (std::size_t i = 0; i < wt.size(); ++i) {
            acc[i] += wt[i];
            acc_sq[i] += wt[i] * wt[i];
        }
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double mean = acc[i] / draws;
        const double var = acc_sq[i] / draws - mean * mean;
        const double se = std::sqrt(var / draws);
        CHECK(std::fabs(mean - expect[i]) < 4.0 * se);
    }
}

TEST_CASE("bridgeout and dropout noise is zero mean") {
    RngStream rng(90, 7);
    Matrix w{{0.7, -1.3, 0.05}};
    const std::size_t draws = 100000;
    for (const auto& cfg :
         {RegularizerConfig::bridgeout(0.4, 1.0), RegularizerConfig::dropout(0.7)}) {
        Matrix acc(1, 3), acc_sq(1, 3);
        for (std::size_t s = 0; s < draws; ++s) {
            MaskSet masks = sample_masks(cfg, 1, 3, rng);
            Matrix wt = perturb_weights(cfg, w, masks);
            for (std::size_t i = 0; i < wt.size(); ++i) {
                acc[i] += wt[i];
                acc_sq[i] += wt[i] * wt[i];
            }
        }
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double mean = acc[i] / draws;
            const double var = acc_sq[i] / draws - mean * mean;
            const double se = std::sqrt(var / draws);
            CHECK(std::fabs(mean - w[i]) < 4.0 * se);
        }
    }
}

TEST_CASE("the dropped branch overshoots zero exactly for 0<w<1 and q<2") {
    for (double w = 0.05; w < 1.0; w += 0.1) {
        for (double q = 0.3; q < 2.21; q += 0.2) {
            Matrix wm{{w}};
            const double dropped = perturb_bridgeout(wm, Matrix{{0.0}}, 0.5, q)[0];
            const bool overshoots = dropped < 0.0;
            const bool expected = w < 1.0 && q < 2.0;
            CHECK(overshoots == expected);
        }
    }
    // w above 1 never overshoots regardless of q.
    Matrix big{{1.5}};
    CHECK(perturb_bridgeout(big, Matrix{{0.0}}, 0.5, 0.5)[0] > 0.0);
}
