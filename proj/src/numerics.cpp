#include "fvein/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fvein/error.hpp"
#include "fvein/rng.hpp"

namespace fvein {

GrayImage normalize_zero_mean(const GrayImage& image) {
    require(!image.empty(), "normalize_zero_mean: empty image");
    GrayImage out(image.pixels.array() - image.pixels.mean());
    // A second pass removes the residual left by rounding in the first mean.
    out.pixels.array() -= out.pixels.mean();
    return out;
}

GrayImage resize_area(const GrayImage& image, Eigen::Index height, Eigen::Index width) {
    require(!image.empty(), "resize_area: empty image");
    require(height >= 1 && width >= 1, "resize_area: target size must be positive");
    if (image.height() == height && image.width() == width) return image;

    // Per-axis weights: weight(o, i) = overlap of output cell o with source pixel i.
    auto axis_weights = [](Eigen::Index src, Eigen::Index dst) {
        Matrix w = Matrix::Zero(dst, src);
        const double scale = static_cast<double>(src) / static_cast<double>(dst);
        for (Eigen::Index o = 0; o < dst; ++o) {
            const double lo = o * scale;
            const double hi = (o + 1) * scale;
            for (auto i = static_cast<Eigen::Index>(std::floor(lo));
                 i < src && static_cast<double>(i) < hi; ++i) {
                const double overlap =
                    std::min(hi, static_cast<double>(i + 1)) - std::max(lo, static_cast<double>(i));
                if (overlap > 0) w(o, i) = overlap / scale;
            }
        }
        return w;
    };
    const Matrix wr = axis_weights(image.height(), height);
    const Matrix wc = axis_weights(image.width(), width);
    return GrayImage(RowMatrix(wr * image.pixels * wc.transpose()));
}

std::vector<PatchPosition> sample_patch_positions(Eigen::Index height, Eigen::Index width,
                                                  int patch_side, Eigen::Index count,
                                                  std::uint64_t seed) {
    require(patch_side >= 1, "extract_patches: patch_side must be positive");
    require(count >= 1, "extract_patches: count must be positive");
    require(patch_side <= height && patch_side <= width,
            "extract_patches: patch_side " + std::to_string(patch_side) + " exceeds image size " +
                std::to_string(height) + "x" + std::to_string(width));
    Rng rng(seed);
    const auto rows = static_cast<std::uint64_t>(height - patch_side + 1);
    const auto cols = static_cast<std::uint64_t>(width - patch_side + 1);
    std::vector<PatchPosition> positions(static_cast<std::size_t>(count));
    for (auto& p : positions) {
        p.row = static_cast<Eigen::Index>(rng.below(rows));
        p.col = static_cast<Eigen::Index>(rng.below(cols));
    }
    return positions;
}

Vector patch_at(const GrayImage& image, int patch_side, Eigen::Index row, Eigen::Index col) {
    Vector v(patch_side * patch_side);
    for (int r = 0; r < patch_side; ++r)
        for (int c = 0; c < patch_side; ++c) v(r * patch_side + c) = image.pixels(row + r, col + c);
    return v;
}

PatchMatrix extract_patches(const GrayImage& image, int patch_side, Eigen::Index count,
                            std::uint64_t seed) {
    const auto positions =
        sample_patch_positions(image.height(), image.width(), patch_side, count, seed);
    PatchMatrix out{patch_side, Matrix(patch_side * patch_side, count)};
    for (Eigen::Index i = 0; i < count; ++i) {
        const auto& p = positions[static_cast<std::size_t>(i)];
        out.data.col(i) = patch_at(image, patch_side, p.row, p.col);
    }
    return out;
}

PatchMatrix extract_patches(std::span<const GrayImage> images, int patch_side,
                            Eigen::Index count, std::uint64_t seed) {
    require(!images.empty(), "extract_patches: no images");
    require(patch_side >= 1, "extract_patches: patch_side must be positive");
    require(count >= 1, "extract_patches: count must be positive");
    for (const auto& img : images)
        require(patch_side <= img.height() && patch_side <= img.width(),
                "extract_patches: patch_side " + std::to_string(patch_side) +
                    " exceeds image size " + std::to_string(img.height()) + "x" +
                    std::to_string(img.width()));

    Rng rng(seed);
    PatchMatrix out{patch_side, Matrix(patch_side * patch_side, count)};
    for (Eigen::Index i = 0; i < count; ++i) {
        const auto& img = images[rng.below(images.size())];
        const auto row = static_cast<Eigen::Index>(
            rng.below(static_cast<std::uint64_t>(img.height() - patch_side + 1)));
        const auto col = static_cast<Eigen::Index>(
            rng.below(static_cast<std::uint64_t>(img.width() - patch_side + 1)));
        out.data.col(i) = patch_at(img, patch_side, row, col);
    }
    return out;
}

Matrix empirical_covariance(const Matrix& samples) {
    const Vector mean = samples.rowwise().mean();
    const Matrix centered = samples.colwise() - mean;
    return centered * centered.transpose() / static_cast<double>(samples.cols());
}

WhiteningTransform fit_pca_whitening(const PatchMatrix& patches, int retained_dim,
                                     double epsilon) {
    return fit_pca_whitening(patches.data, retained_dim, epsilon);
}

WhiteningTransform fit_pca_whitening(const Matrix& samples, int retained_dim, double epsilon) {
    const auto dim = static_cast<int>(samples.rows());
    require(dim >= 1 && samples.cols() >= 1, "fit_pca_whitening: empty sample matrix");
    require(retained_dim >= 1, "fit_pca_whitening: retained_dim must be >= 1");
    require(retained_dim <= dim, "fit_pca_whitening: retained_dim " +
                                     std::to_string(retained_dim) + " exceeds input dim " +
                                     std::to_string(dim));
    require(samples.cols() >= retained_dim,
            "fit_pca_whitening: need at least retained_dim samples");
    require(epsilon > 0.0, "fit_pca_whitening: epsilon must be positive");
    if (!samples.allFinite()) fail(ErrorKind::Numeric, "fit_pca_whitening: non-finite input");

    WhiteningTransform t;
    t.input_dim = dim;
    t.retained_dim = retained_dim;
    t.epsilon = epsilon;
    t.mean = samples.rowwise().mean();

    Eigen::SelfAdjointEigenSolver<Matrix> solver(empirical_covariance(samples));
    if (solver.info() != Eigen::Success)
        fail(ErrorKind::Numeric, "fit_pca_whitening: eigendecomposition failed");

    // Eigen sorts ascending; take the trailing columns in reverse.
    t.eigenvalues.resize(retained_dim);
    t.projection.resize(retained_dim, dim);
    for (int k = 0; k < retained_dim; ++k) {
        const int src = dim - 1 - k;
        const double lambda = solver.eigenvalues()(src);
        if (lambda < -1e-10)
            fail(ErrorKind::Numeric, "fit_pca_whitening: covariance has negative eigenvalue");
        Vector u = solver.eigenvectors().col(src);
        Eigen::Index argmax = 0;
        u.cwiseAbs().maxCoeff(&argmax);
        if (u(argmax) < 0) u = -u;
        t.eigenvalues(k) = lambda;
        t.projection.row(k) = u.transpose() / std::sqrt(std::max(lambda, 0.0) + epsilon);
    }
    return t;
}

Matrix apply_whitening(const WhiteningTransform& transform, const Matrix& vectors) {
    require(vectors.rows() == transform.input_dim,
            "apply_whitening: vector length " + std::to_string(vectors.rows()) +
                " does not match input dim " + std::to_string(transform.input_dim));
    return transform.projection * (vectors.colwise() - transform.mean);
}

}  // namespace fvein
