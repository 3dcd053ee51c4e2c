// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "splatstyle/error.hpp"
#include "splatstyle/metrics.hpp"
#include "test_util.hpp"

using namespace splatstyle;
using testutil::random_image;

namespace {

Descriptor desc(std::initializer_list<double> values) {
    Descriptor d;
    d.values = values;
    d.source = "extractor";
    return d;
}

} // namespace

TEST_CASE("correlation map rows are stochastic") {
    Rng rng(81);
    FeatureMap f(3, 2, 5);
    for (double& v : f.data) v = rng.uniform(-2, 2);
    const Mat s = correlation_map(f);
    REQUIRE(s.rows == 6);
    for (int i = 0; i < s.rows; ++i) {
        double sum = 0;
        for (int j = 0; j < s.cols; ++j) {
            CHECK(s(i, j) >= 0.0);
            sum += s(i, j);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("cfsd: identical images score zero") {
    Rng rng(82);
    const FeatureExtractor ext = FeatureExtractor::seeded(5);
    for (int trial = 0; trial < 5; ++trial) {
        const ImageRGB img = random_image(rng, 16, 16);
        CHECK(std::abs(cfsd(img, img, ext)) < 1e-9);
    }
}

TEST_CASE("cfsd: 2x2 hand-built feature maps match the explicit oracle") {
    FeatureMap fc(2, 2, 2), fs(2, 2, 2);
    fc.data = {0.5, -0.25, 1.0, 0.75, -0.5, 0.25, 0.0, 1.5};
    fs.data = {1.0, 0.0, -0.5, 0.5, 0.25, 0.75, 1.25, -1.0};
    const double got = cfsd_features(fc, fs);

    // oracle: row softmax of F F^T for both maps, then mean KL, spelled out
    auto softmax_rows = [](const double f[4][2]) {
        std::array<std::array<double, 4>, 4> s{};
        for (int i = 0; i < 4; ++i) {
            double m[4];
            double mx = -1e300;
            for (int j = 0; j < 4; ++j) {
                m[j] = f[i][0] * f[j][0] + f[i][1] * f[j][1];
                mx = std::max(mx, m[j]);
            }
            double denom = 0;
            for (int j = 0; j < 4; ++j) {
                s[i][j] = std::exp(m[j] - mx);
                denom += s[i][j];
            }
            for (int j = 0; j < 4; ++j) s[i][j] /= denom;
        }
        return s;
    };
    const double fc_arr[4][2] = {{0.5, -0.25}, {1.0, 0.75}, {-0.5, 0.25}, {0.0, 1.5}};
    const double fs_arr[4][2] = {{1.0, 0.0}, {-0.5, 0.5}, {0.25, 0.75}, {1.25, -1.0}};
    const auto sc = softmax_rows(fc_arr);
    const auto scs = softmax_rows(fs_arr);
    double expected = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) expected += sc[i][j] * std::log(sc[i][j] / scs[i][j]);
    expected /= 4.0;
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("cfsd: nonnegative and shape-checked") {
    Rng rng(83);
    const FeatureExtractor ext = FeatureExtractor::seeded(5);
    const ImageRGB a = random_image(rng, 16, 16);
    const ImageRGB b = random_image(rng, 16, 16);
    CHECK(cfsd(a, b, ext) >= 0.0);
    CHECK_THROWS_AS(cfsd(a, random_image(rng, 8, 8), ext), Error);
}

TEST_CASE("csd: trivial values, scale invariance, errors") {
    CHECK(csd_score(desc({1, 2, 3}), desc({1, 2, 3})) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(csd_score(desc({1, 0}), desc({0, 1})) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(csd_score(desc({1, 2}), desc({-1, -2})) == doctest::Approx(-1.0).epsilon(1e-12));

    const double base = csd_score(desc({0.3, -0.7, 0.2}), desc({1.0, 0.4, -0.1}));
    CHECK(csd_score(desc({0.3 * 5, -0.7 * 5, 0.2 * 5}), desc({1.0, 0.4, -0.1})) ==
          doctest::Approx(base).epsilon(1e-12));
    CHECK(csd_score(desc({0.3, -0.7, 0.2}), desc({1.0 * 0.01, 0.4 * 0.01, -0.1 * 0.01})) ==
          doctest::Approx(base).epsilon(1e-12));

    CHECK_THROWS_AS(csd_score(desc({0, 0}), desc({1, 1})), Error);
    CHECK_THROWS_AS(csd_score(desc({1, 1}), desc({1, 1, 1})), Error);
}

TEST_CASE("clip_dc: degenerate directions score 1 and are counted") {
    const std::vector<Descriptor> frames{desc({1, 2}), desc({3, 4}), desc({5, 6})};
    const ClipDcResult res = clip_dc(frames, frames); // stylized == original
    CHECK(res.score == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.degenerate_pairs == 2);
}

TEST_CASE("clip_dc: constant edit direction is perfectly consistent") {
    const std::vector<Descriptor> orig{desc({0, 0}), desc({1, 1}), desc({2, 0})};
    std::vector<Descriptor> styl;
    for (const Descriptor& d : orig) styl.push_back(desc({d.values[0] + 0.5, d.values[1] - 0.25}));
    const ClipDcResult res = clip_dc(orig, styl);
    CHECK(res.score == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.degenerate_pairs == 0);
}

TEST_CASE("clip_dc: invariant to positive rescaling of a single direction") {
    const std::vector<Descriptor> orig{desc({0, 0}), desc({0, 0}), desc({0, 0})};
    const std::vector<Descriptor> styl{desc({1, 2}), desc({2, 1}), desc({-1, 1})};
    const double base = clip_dc(orig, styl).score;
    const std::vector<Descriptor> scaled{desc({1 * 9.0, 2 * 9.0}), desc({2, 1}), desc({-1, 1})};
    CHECK(clip_dc(orig, scaled).score == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("clip_dc: length guards") {
    const std::vector<Descriptor> two{desc({1, 2}), desc({3, 4})};
    const std::vector<Descriptor> one{desc({1, 2})};
    CHECK_THROWS_AS(clip_dc(two, one), Error);
    CHECK_THROWS_AS(clip_dc(one, one), Error);
}

TEST_CASE("descriptors: mean-pooled features, tagged by source") {
    Rng rng(84);
    const FeatureExtractor ext = FeatureExtractor::seeded(5);
    const ImageRGB img = random_image(rng, 16, 16);
    const Descriptor d = descriptor_from_image(ext, img);
    CHECK(d.source == "extractor");
    const FeatureMap f = ext.extract(img);
    CHECK(static_cast<int>(d.values.size()) == f.channels);
    double mean0 = 0;
    for (int i = 0; i < f.positions(); ++i) mean0 += f.data[static_cast<std::size_t>(i) * f.channels];
    mean0 /= f.positions();
    CHECK(d.values[0] == doctest::Approx(mean0).epsilon(1e-12));
}
