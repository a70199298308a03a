#include <doctest.h>

#include <cmath>

#include "fvein/error.hpp"
#include "fvein/numerics.hpp"
#include "fvein/rng.hpp"
#include "oracles.hpp"

using namespace fvein;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an fvein::Error");
    return ErrorKind::State;
}

Matrix gaussian_samples(const Matrix& mix, long n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix z(mix.cols(), n);
    for (long j = 0; j < n; ++j)
        for (long i = 0; i < mix.cols(); ++i) z(i, j) = rng.normal();
    return mix * z;
}

double sum_pixels(const GrayImage& img) {
    double s = 0;
    for (long r = 0; r < img.height(); ++r)
        for (long c = 0; c < img.width(); ++c) s += img.pixels(r, c);
    return s;
}

}  // namespace

TEST_SUITE("numerics") {

TEST_CASE("zero mean of constant image") {
    const auto out = normalize_zero_mean(GrayImage(5, 7, 0.5));
    CHECK(out.height() == 5);
    CHECK(out.width() == 7);
    CHECK((out.pixels.array() == 0.0).all());
}

TEST_CASE("zero mean of two pixels") {
    GrayImage img(1, 2);
    img.pixels << 0.2, 0.8;
    const auto out = normalize_zero_mean(img);
    CHECK(out.pixels(0, 0) == doctest::Approx(-0.3).epsilon(1e-15));
    CHECK(out.pixels(0, 1) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("zero mean of random image by summation") {
    const auto out = normalize_zero_mean(oracle::random_image(64, 64, 3));
    CHECK(std::abs(sum_pixels(out) / (64.0 * 64.0)) < 1e-9);
}

TEST_CASE("zero mean is idempotent") {
    const auto once = normalize_zero_mean(oracle::random_image(31, 17, 9));
    const auto twice = normalize_zero_mean(once);
    CHECK((once.pixels - twice.pixels).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("zero mean rejects empty image") {
    CHECK(kind_of([] { normalize_zero_mean(GrayImage{}); }) == ErrorKind::InvalidInput);
}

TEST_CASE("resize by area averaging") {
    GrayImage img(2, 4);
    img.pixels << 0, 1, 2, 3, 4, 5, 6, 7;
    const auto half = resize_area(img, 1, 2);
    CHECK(half.pixels(0, 0) == doctest::Approx(2.5));
    CHECK(half.pixels(0, 1) == doctest::Approx(4.5));
    const auto same = resize_area(img, 2, 4);
    CHECK(same == img);
    const auto big = oracle::random_image(48, 80, 4);
    const auto small = resize_area(big, 30, 50);
    CHECK(small.mean() == doctest::Approx(big.mean()).epsilon(1e-12));
}

TEST_CASE("single valid patch position") {
    const auto img = oracle::random_image(8, 8, 1);
    for (std::uint64_t seed : {0u, 5u, 99u}) {
        const auto p = extract_patches(img, 8, 3, seed);
        REQUIRE(p.data.rows() == 64);
        REQUIRE(p.data.cols() == 3);
        for (int j = 0; j < 3; ++j)
            for (int r = 0; r < 8; ++r)
                for (int c = 0; c < 8; ++c) CHECK(p.data(r * 8 + c, j) == img.pixels(r, c));
    }
}

TEST_CASE("patch larger than image") {
    const auto img = oracle::random_image(8, 8, 1);
    CHECK(kind_of([&] { extract_patches(img, 9, 1, 1); }) == ErrorKind::InvalidInput);
}

TEST_CASE("patches reproduced from re-derived positions") {
    const auto img = oracle::random_image(64, 64, 2);
    const auto p = extract_patches(img, 8, 10000, 42);
    Rng rng(42);
    bool all_match = true;
    for (long j = 0; j < 10000; ++j) {
        const long r = static_cast<long>(rng.below(57));
        const long c = static_cast<long>(rng.below(57));
        for (int i = 0; i < 8 && all_match; ++i)
            for (int k = 0; k < 8; ++k)
                if (p.data(i * 8 + k, j) != img.pixels(r + i, c + k)) all_match = false;
    }
    CHECK(all_match);
}

TEST_CASE("patch positions deterministic and in bounds") {
    const auto a = sample_patch_positions(20, 33, 7, 500, 11);
    const auto b = sample_patch_positions(20, 33, 7, 500, 11);
    REQUIRE(a.size() == 500);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].row == b[i].row);
        CHECK(a[i].col == b[i].col);
        CHECK(a[i].row >= 0);
        CHECK(a[i].col >= 0);
        CHECK(a[i].row + 7 <= 20);
        CHECK(a[i].col + 7 <= 33);
    }
}

TEST_CASE("multi-image patches deterministic") {
    std::vector<GrayImage> imgs{oracle::random_image(16, 16, 1), oracle::random_image(20, 12, 2)};
    const auto a = extract_patches(std::span<const GrayImage>(imgs), 5, 300, 8);
    const auto b = extract_patches(std::span<const GrayImage>(imgs), 5, 300, 8);
    CHECK(same_values(a.data, b.data));
    CHECK(a.patch_dim() == 25);
}

TEST_CASE("whitening of identity-covariance data") {
    const Matrix x = gaussian_samples(Matrix::Identity(6, 6), 20000, 5);
    const auto w = fit_pca_whitening(x, 6, 1e-5);
    const Matrix cov = empirical_covariance(apply_whitening(w, x));
    CHECK((cov - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("whitening of anisotropic 2-D data") {
    Matrix mix(2, 2);
    mix << 2, 0, 0, 1;
    const Matrix x = gaussian_samples(mix, 5000, 6);
    const auto w = fit_pca_whitening(x, 2, 1e-5);
    const Matrix cov = empirical_covariance(apply_whitening(w, x));
    CHECK(std::abs(cov(0, 0) - 1) <= 0.05);
    CHECK(std::abs(cov(1, 1) - 1) <= 0.05);
    CHECK(w.eigenvalues(0) == doctest::Approx(4).epsilon(0.1));
}

TEST_CASE("whitening property on random full-rank data") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed * 31);
        const int d = 3 + static_cast<int>(seed);
        const Matrix mix = oracle::random_matrix(d, d, rng) + 2.0 * Matrix::Identity(d, d);
        const Matrix x = gaussian_samples(mix, 20L * d * 10, seed);
        const auto w = fit_pca_whitening(x, d, 1e-8);
        const Matrix cov = empirical_covariance(apply_whitening(w, x));
        CHECK((cov - Matrix::Identity(d, d)).norm() / d <= 0.05);
        for (long i = 0; i + 1 < w.eigenvalues.size(); ++i) CHECK(w.eigenvalues(i) >= w.eigenvalues(i + 1));
        CHECK(w.eigenvalues.minCoeff() >= -1e-10);
    }
}

TEST_CASE("whitening sign convention and reduction") {
    Rng rng(77);
    const Matrix x = gaussian_samples(oracle::random_matrix(5, 5, rng) + Matrix::Identity(5, 5), 1000, 3);
    const auto w = fit_pca_whitening(x, 3, 0.1);
    CHECK(w.projection.rows() == 3);
    CHECK(w.projection.cols() == 5);
    for (long k = 0; k < 3; ++k) {
        Eigen::Index at = 0;
        w.projection.row(k).cwiseAbs().maxCoeff(&at);
        CHECK(w.projection(k, at) > 0);
    }
}

TEST_CASE("whitening preconditions") {
    const Matrix x = gaussian_samples(Matrix::Identity(4, 4), 50, 1);
    CHECK(kind_of([&] { fit_pca_whitening(x, 0, 0.1); }) == ErrorKind::InvalidInput);
    CHECK(kind_of([&] { fit_pca_whitening(x, 5, 0.1); }) == ErrorKind::InvalidInput);
    CHECK(kind_of([&] { fit_pca_whitening(x.leftCols(3), 4, 0.1); }) == ErrorKind::InvalidInput);
    Matrix bad = x;
    bad(1, 1) = std::nan("");
    CHECK(kind_of([&] { fit_pca_whitening(bad, 2, 0.1); }) == ErrorKind::Numeric);
}

TEST_CASE("apply whitening") {
    Rng rng(12);
    const Matrix x = gaussian_samples(oracle::random_matrix(4, 4, rng) + Matrix::Identity(4, 4), 400, 2);
    const auto w = fit_pca_whitening(x, 3, 0.1);

    const Matrix at_mean = apply_whitening(w, w.mean);
    CHECK(at_mean.cwiseAbs().maxCoeff() == 0.0);

    Matrix e = Matrix::Zero(4, 1);
    e(2, 0) = 1.0;
    const Matrix out = apply_whitening(w, e);
    for (int k = 0; k < 3; ++k) {
        double expect = 0;
        for (int i = 0; i < 4; ++i) expect += w.projection(k, i) * (e(i, 0) - w.mean(i));
        CHECK(out(k, 0) == doctest::Approx(expect).epsilon(1e-14));
    }

    const Vector a = x.col(0), b = x.col(1);
    const Matrix lhs = apply_whitening(w, (2.0 * (a - w.mean) - 0.5 * (b - w.mean) + w.mean).eval());
    const Matrix rhs = 2.0 * apply_whitening(w, a) - 0.5 * apply_whitening(w, b);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);

    CHECK(kind_of([&] { apply_whitening(w, Matrix::Zero(5, 1)); }) == ErrorKind::InvalidInput);
}

}
