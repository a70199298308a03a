#pragma once

#include <vector>

#include "fvein/autoencoder.hpp"
#include "fvein/numerics.hpp"

namespace fvein {

// Learned kernels with the whitening transform folded in, so a raw patch p
// activates unit k as sigmoid(kernel_k . p + bias_k).
struct FeatureBank {
    int patch_side = 0;
    Matrix kernels;  // kernel_count x patch_side^2, each row a row-major s x s kernel
    Vector biases;   // kernel_count

    int kernel_count() const { return static_cast<int>(kernels.rows()); }

    // Kernel k reshaped to s x s.
    RowMatrix kernel(int k) const;

    bool operator==(const FeatureBank& o) const {
        return patch_side == o.patch_side && same_values(kernels, o.kernels) &&
               same_values(biases, o.biases);
    }
};

// kernel_count response maps of equal size, stored map-major.
struct ResponseMaps {
    int kernel_count = 0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    Matrix values;  // kernel_count x (rows * cols), each row a row-major map

    double at(int k, Eigen::Index r, Eigen::Index c) const { return values(k, r * cols + c); }
};

using PooledFeatureVector = Vector;

FeatureBank build_feature_bank(const AutoencoderParams& params, const WhiteningTransform& whitening,
                               int patch_side);

/// Valid-region cross-correlation (no kernel flip, no padding) followed by the
/// logistic nonlinearity: response[k](r, c) = sigmoid(sum over the s x s
/// window at (r, c) of image * kernel_k + bias_k). Output maps are
/// (H - s + 1) x (W - s + 1).
ResponseMaps convolve_features(const GrayImage& image, const FeatureBank& bank);

/// Averages each response map over a pool_rows x pool_cols grid. Along each
/// axis a map of n pixels is cut into p cells of n / p pixels, and the
/// n % p leftover pixels go one each to the trailing cells. Output layout is
/// kernel-major, then row-major over cells.
PooledFeatureVector mean_pool(const ResponseMaps& responses, int pool_rows, int pool_cols);

PooledFeatureVector represent(const GrayImage& image, const FeatureBank& bank, int pool_rows,
                              int pool_cols);

// Cell boundaries used by mean_pool: boundaries[i] .. boundaries[i+1].
std::vector<Eigen::Index> pool_boundaries(Eigen::Index length, int cells);

}  // namespace fvein
