#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fvein {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Shape-checked exact equality (Eigen's operator== asserts on shape mismatch).
template <typename A, typename B>
bool same_values(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           (a.derived().array() == b.derived().array()).all();
}

// Grayscale image with real-valued intensities. Decoded files land in [0,1];
// after zero-mean normalization values may be negative.
struct GrayImage {
    RowMatrix pixels;

    GrayImage() = default;
    explicit GrayImage(RowMatrix p) : pixels(std::move(p)) {}
    GrayImage(Eigen::Index height, Eigen::Index width, double fill = 0.0)
        : pixels(RowMatrix::Constant(height, width, fill)) {}

    Eigen::Index height() const { return pixels.rows(); }
    Eigen::Index width() const { return pixels.cols(); }
    bool empty() const { return pixels.size() == 0; }
    double mean() const { return pixels.mean(); }

    bool operator==(const GrayImage& other) const {
        return same_values(pixels, other.pixels);
    }
};

// One vectorized patch per column, row-major within the patch.
struct PatchMatrix {
    int patch_side = 0;
    Matrix data;

    int patch_dim() const { return patch_side * patch_side; }
    Eigen::Index count() const { return data.cols(); }
};

// Top-left corner of a sampled patch.
struct PatchPosition {
    std::size_t image = 0;
    Eigen::Index row = 0;
    Eigen::Index col = 0;
};

struct WhiteningTransform {
    int input_dim = 0;
    int retained_dim = 0;
    Vector mean;
    Matrix projection;   // retained_dim x input_dim, equals diag(1/sqrt(lambda+eps)) * U^T
    double epsilon = 0.0;
    Vector eigenvalues;  // leading sample-covariance eigenvalues, before epsilon, descending

    bool operator==(const WhiteningTransform& o) const {
        return input_dim == o.input_dim && retained_dim == o.retained_dim && epsilon == o.epsilon &&
               same_values(mean, o.mean) && same_values(projection, o.projection) &&
               same_values(eigenvalues, o.eigenvalues);
    }
};

GrayImage normalize_zero_mean(const GrayImage& image);

// Box-filter resampling where every output pixel averages the exact source
// area it covers, including fractional pixel overlaps.
GrayImage resize_area(const GrayImage& image, Eigen::Index height, Eigen::Index width);

// Positions are drawn from Rng(seed) as: for each patch, row = below(H-s+1)
// then col = below(W-s+1).
std::vector<PatchPosition> sample_patch_positions(Eigen::Index height, Eigen::Index width,
                                                  int patch_side, Eigen::Index count,
                                                  std::uint64_t seed);

PatchMatrix extract_patches(const GrayImage& image, int patch_side, Eigen::Index count,
                            std::uint64_t seed);

// Samples across a collection: for each patch the image index is drawn first
// (below(n_images)), then row and column as in the single-image case. All
// images must be at least patch_side in each dimension.
PatchMatrix extract_patches(std::span<const GrayImage> images, int patch_side,
                            Eigen::Index count, std::uint64_t seed);

// Copies the s x s window at (row, col) into a row-major vector.
Vector patch_at(const GrayImage& image, int patch_side, Eigen::Index row, Eigen::Index col);

WhiteningTransform fit_pca_whitening(const PatchMatrix& patches, int retained_dim, double epsilon);
WhiteningTransform fit_pca_whitening(const Matrix& samples, int retained_dim, double epsilon);

Matrix apply_whitening(const WhiteningTransform& transform, const Matrix& vectors);

// Empirical covariance with 1/n normalization; columns are samples.
Matrix empirical_covariance(const Matrix& samples);

}  // namespace fvein
