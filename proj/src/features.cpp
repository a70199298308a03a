#include "fvein/features.hpp"

#include <string>

#include "fvein/error.hpp"

namespace fvein {

RowMatrix FeatureBank::kernel(int k) const {
    RowMatrix out(patch_side, patch_side);
    for (int r = 0; r < patch_side; ++r)
        for (int c = 0; c < patch_side; ++c) out(r, c) = kernels(k, r * patch_side + c);
    return out;
}

FeatureBank build_feature_bank(const AutoencoderParams& params, const WhiteningTransform& whitening,
                               int patch_side) {
    params.validate();
    require(patch_side >= 1, "build_feature_bank: patch_side must be positive");
    require(params.input_dim() == whitening.retained_dim,
            "build_feature_bank: autoencoder input dim " + std::to_string(params.input_dim()) +
                " does not match whitening retained dim " + std::to_string(whitening.retained_dim));
    require(whitening.input_dim == patch_side * patch_side,
            "build_feature_bank: whitening input dim " + std::to_string(whitening.input_dim) +
                " does not match patch_side^2 = " + std::to_string(patch_side * patch_side));
    FeatureBank bank;
    bank.patch_side = patch_side;
    bank.kernels = params.w1 * whitening.projection;
    bank.biases = params.b1 - bank.kernels * whitening.mean;
    return bank;
}

ResponseMaps convolve_features(const GrayImage& image, const FeatureBank& bank) {
    const int s = bank.patch_side;
    require(s >= 1 && bank.kernels.cols() == s * s && bank.biases.size() == bank.kernels.rows(),
            "convolve_features: malformed feature bank");
    require(image.height() >= s && image.width() >= s,
            "convolve_features: image " + std::to_string(image.height()) + "x" +
                std::to_string(image.width()) + " smaller than kernel side " + std::to_string(s));

    ResponseMaps out;
    out.kernel_count = bank.kernel_count();
    out.rows = image.height() - s + 1;
    out.cols = image.width() - s + 1;
    const Eigen::Index positions = out.rows * out.cols;

    // im2col: one window per column, vectorized like patches.
    Matrix windows(s * s, positions);
    for (Eigen::Index r = 0; r < out.rows; ++r)
        for (Eigen::Index c = 0; c < out.cols; ++c)
            for (int dr = 0; dr < s; ++dr)
                for (int dc = 0; dc < s; ++dc)
                    windows(dr * s + dc, r * out.cols + c) = image.pixels(r + dr, c + dc);

    out.values = (bank.kernels * windows).colwise() + bank.biases;
    out.values = out.values.unaryExpr([](double z) { return sigmoid(z); });
    return out;
}

std::vector<Eigen::Index> pool_boundaries(Eigen::Index length, int cells) {
    std::vector<Eigen::Index> b(static_cast<std::size_t>(cells) + 1, 0);
    const Eigen::Index base = length / cells;
    const Eigen::Index extra = length % cells;
    for (int i = 0; i < cells; ++i) {
        const bool trailing = i >= cells - extra;
        b[static_cast<std::size_t>(i) + 1] = b[static_cast<std::size_t>(i)] + base + (trailing ? 1 : 0);
    }
    return b;
}

PooledFeatureVector mean_pool(const ResponseMaps& responses, int pool_rows, int pool_cols) {
    require(pool_rows >= 1 && pool_cols >= 1, "mean_pool: pool grid must be positive");
    require(pool_rows <= responses.rows && pool_cols <= responses.cols,
            "mean_pool: pool grid " + std::to_string(pool_rows) + "x" + std::to_string(pool_cols) +
                " larger than response map " + std::to_string(responses.rows) + "x" +
                std::to_string(responses.cols));
    const auto rb = pool_boundaries(responses.rows, pool_rows);
    const auto cb = pool_boundaries(responses.cols, pool_cols);
    const int cells = pool_rows * pool_cols;
    PooledFeatureVector out(static_cast<Eigen::Index>(responses.kernel_count) * cells);

    for (int k = 0; k < responses.kernel_count; ++k) {
        for (int pr = 0; pr < pool_rows; ++pr) {
            for (int pc = 0; pc < pool_cols; ++pc) {
                double sum = 0.0;
                for (Eigen::Index r = rb[pr]; r < rb[pr + 1]; ++r)
                    for (Eigen::Index c = cb[pc]; c < cb[pc + 1]; ++c) sum += responses.at(k, r, c);
                const double n = static_cast<double>((rb[pr + 1] - rb[pr]) * (cb[pc + 1] - cb[pc]));
                out(static_cast<Eigen::Index>(k) * cells + pr * pool_cols + pc) = sum / n;
            }
        }
    }
    return out;
}

PooledFeatureVector represent(const GrayImage& image, const FeatureBank& bank, int pool_rows,
                              int pool_cols) {
    return mean_pool(convolve_features(image, bank), pool_rows, pool_cols);
}

}  // namespace fvein
