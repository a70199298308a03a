#pragma once

#include <cstdint>
#include <vector>

#include "fvein/lbfgs.hpp"
#include "fvein/numerics.hpp"

namespace fvein {

// One-hidden-layer autoencoder with logistic units on both layers.
struct AutoencoderParams {
    Matrix w1;  // hidden x input
    Vector b1;  // hidden
    Matrix w2;  // input x hidden
    Vector b2;  // input

    int input_dim() const { return static_cast<int>(w1.cols()); }
    int hidden_dim() const { return static_cast<int>(w1.rows()); }

    static AutoencoderParams zeros(int input_dim, int hidden_dim);

    // Flattening order: W1 row-major, b1, W2 row-major, b2.
    Vector flatten() const;
    static AutoencoderParams unflatten(const Vector& theta, int input_dim, int hidden_dim);
    static Eigen::Index flat_size(int input_dim, int hidden_dim);

    // Throws invalid-input on inconsistent shapes, numeric on non-finite entries.
    void validate() const;

    bool operator==(const AutoencoderParams& o) const {
        return same_values(w1, o.w1) && same_values(b1, o.b1) && same_values(w2, o.w2) &&
               same_values(b2, o.b2);
    }
};

struct SparsityHyper {
    double lambda = 1e-4;  // weight decay
    double beta = 3.0;     // sparsity penalty weight
    double rho = 0.05;     // target mean activation

    void validate() const;
};

struct ForwardResult {
    Matrix hidden;  // hidden x m
    Matrix output;  // input x m
};

struct CostTerms {
    double reconstruction = 0.0;  // (1/m) sum ||h(x) - x||^2
    double weight_sq = 0.0;       // sum of squared W1 and W2 entries
    double kl = 0.0;              // sum over hidden units of KL(rho || rho_hat_j)
    double total(const SparsityHyper& h) const {
        return reconstruction + h.lambda * weight_sq + h.beta * kl;
    }
};

struct TrainReport {
    int iterations_run = 0;
    std::vector<double> cost_trace;
    double final_gradient_norm = 0.0;
    double final_cost = 0.0;
    LbfgsStatus status = LbfgsStatus::MaxIterations;
};

inline constexpr double kActivationClamp = 1e-8;

double sigmoid(double z);

ForwardResult forward(const AutoencoderParams& params, const Matrix& batch);

Vector mean_hidden_activation(const AutoencoderParams& params, const Matrix& batch);

// Bernoulli KL summed over components. rho_hat is clamped into
// [kActivationClamp, 1 - kActivationClamp] first.
double kl_divergence(double rho, const Vector& rho_hat);

CostTerms cost_terms(const AutoencoderParams& params, const Matrix& batch, const SparsityHyper& hyper);
double cost(const AutoencoderParams& params, const Matrix& batch, const SparsityHyper& hyper);

// Analytic backprop gradient, flattened in AutoencoderParams::flatten order.
Vector gradient(const AutoencoderParams& params, const Matrix& batch, const SparsityHyper& hyper);

// Cost and gradient from a single forward pass.
double cost_and_gradient(const AutoencoderParams& params, const Matrix& batch,
                         const SparsityHyper& hyper, Vector& grad);

// Uniform weights in [-r, r], r = sqrt(6) / sqrt(input + hidden + 1); zero biases.
AutoencoderParams init_params(int input_dim, int hidden_dim, std::uint64_t seed);

struct TrainOptions {
    int max_iterations = 700;
    int memory = 20;
};

// Snapshot hook: receives the parameters after each accepted step.
using TrainSnapshot = std::function<void(int iteration, const AutoencoderParams& params)>;

std::pair<AutoencoderParams, TrainReport> train_lbfgs(const AutoencoderParams& init,
                                                      const Matrix& batch,
                                                      const SparsityHyper& hyper,
                                                      const TrainOptions& options,
                                                      const TrainSnapshot& snapshot = {});

}  // namespace fvein
