#include "fvein/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fvein/error.hpp"
#include "fvein/rng.hpp"

namespace fvein {

namespace {

void check_batch(const AutoencoderParams& p, const Matrix& batch) {
    p.validate();
    require(batch.cols() >= 1, "autoencoder: empty batch");
    require(batch.rows() == p.input_dim(),
            "autoencoder: batch rows " + std::to_string(batch.rows()) +
                " do not match input dim " + std::to_string(p.input_dim()));
}

Matrix sigmoid(const Matrix& z) {
    return z.unaryExpr([](double v) { return fvein::sigmoid(v); });
}

Vector clamp_activation(const Vector& v) {
    return v.cwiseMax(kActivationClamp).cwiseMin(1.0 - kActivationClamp);
}

}  // namespace

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

AutoencoderParams AutoencoderParams::zeros(int input_dim, int hidden_dim) {
    return {Matrix::Zero(hidden_dim, input_dim), Vector::Zero(hidden_dim),
            Matrix::Zero(input_dim, hidden_dim), Vector::Zero(input_dim)};
}

Eigen::Index AutoencoderParams::flat_size(int input_dim, int hidden_dim) {
    return 2 * static_cast<Eigen::Index>(input_dim) * hidden_dim + input_dim + hidden_dim;
}

Vector AutoencoderParams::flatten() const {
    const int in = input_dim();
    const int hid = hidden_dim();
    Vector theta(flat_size(in, hid));
    Eigen::Index k = 0;
    for (int r = 0; r < hid; ++r)
        for (int c = 0; c < in; ++c) theta(k++) = w1(r, c);
    theta.segment(k, hid) = b1;
    k += hid;
    for (int r = 0; r < in; ++r)
        for (int c = 0; c < hid; ++c) theta(k++) = w2(r, c);
    theta.segment(k, in) = b2;
    return theta;
}

AutoencoderParams AutoencoderParams::unflatten(const Vector& theta, int input_dim, int hidden_dim) {
    require(theta.size() == flat_size(input_dim, hidden_dim),
            "AutoencoderParams::unflatten: length mismatch");
    AutoencoderParams p = zeros(input_dim, hidden_dim);
    Eigen::Index k = 0;
    for (int r = 0; r < hidden_dim; ++r)
        for (int c = 0; c < input_dim; ++c) p.w1(r, c) = theta(k++);
    p.b1 = theta.segment(k, hidden_dim);
    k += hidden_dim;
    for (int r = 0; r < input_dim; ++r)
        for (int c = 0; c < hidden_dim; ++c) p.w2(r, c) = theta(k++);
    p.b2 = theta.segment(k, input_dim);
    return p;
}

void AutoencoderParams::validate() const {
    require(w1.rows() >= 1 && w1.cols() >= 1, "autoencoder: empty weight matrix");
    require(b1.size() == w1.rows() && w2.rows() == w1.cols() && w2.cols() == w1.rows() &&
                b2.size() == w1.cols(),
            "autoencoder: inconsistent parameter shapes");
    if (!w1.allFinite() || !b1.allFinite() || !w2.allFinite() || !b2.allFinite())
        fail(ErrorKind::Numeric, "autoencoder: non-finite parameters");
}

void SparsityHyper::validate() const {
    require(lambda >= 0.0, "sparsity: lambda must be non-negative");
    require(beta >= 0.0, "sparsity: beta must be non-negative");
    require(rho > 0.0 && rho < 1.0, "sparsity: rho must lie strictly inside (0,1)");
}

ForwardResult forward(const AutoencoderParams& params, const Matrix& batch) {
    check_batch(params, batch);
    ForwardResult r;
    r.hidden = sigmoid((params.w1 * batch).colwise() + params.b1);
    r.output = sigmoid((params.w2 * r.hidden).colwise() + params.b2);
    return r;
}

Vector mean_hidden_activation(const AutoencoderParams& params, const Matrix& batch) {
    return forward(params, batch).hidden.rowwise().mean();
}

double kl_divergence(double rho, const Vector& rho_hat) {
    if (!(rho > 0.0 && rho < 1.0)) fail(ErrorKind::Numeric, "kl_divergence: rho outside (0,1)");
    if (!rho_hat.allFinite()) fail(ErrorKind::Numeric, "kl_divergence: non-finite rho_hat");
    const Vector r = clamp_activation(rho_hat);
    double total = 0.0;
    for (Eigen::Index j = 0; j < r.size(); ++j)
        total += rho * std::log(rho / r(j)) + (1.0 - rho) * std::log((1.0 - rho) / (1.0 - r(j)));
    return total;
}

CostTerms cost_terms(const AutoencoderParams& params, const Matrix& batch,
                     const SparsityHyper& hyper) {
    hyper.validate();
    const ForwardResult fw = forward(params, batch);
    CostTerms t;
    t.reconstruction = (fw.output - batch).squaredNorm() / static_cast<double>(batch.cols());
    t.weight_sq = params.w1.squaredNorm() + params.w2.squaredNorm();
    t.kl = kl_divergence(hyper.rho, fw.hidden.rowwise().mean());
    return t;
}

double cost(const AutoencoderParams& params, const Matrix& batch, const SparsityHyper& hyper) {
    const double j = cost_terms(params, batch, hyper).total(hyper);
    if (!std::isfinite(j)) fail(ErrorKind::Numeric, "autoencoder cost is not finite");
    return j;
}

double cost_and_gradient(const AutoencoderParams& params, const Matrix& batch,
                         const SparsityHyper& hyper, Vector& grad) {
    hyper.validate();
    const ForwardResult fw = forward(params, batch);
    const double m = static_cast<double>(batch.cols());
    const double rho = hyper.rho;

    const Matrix diff = fw.output - batch;
    const Vector rho_hat = fw.hidden.rowwise().mean();
    const Vector clamped = clamp_activation(rho_hat);

    CostTerms t;
    t.reconstruction = diff.squaredNorm() / m;
    t.weight_sq = params.w1.squaredNorm() + params.w2.squaredNorm();
    t.kl = kl_divergence(rho, rho_hat);
    const double j = t.total(hyper);
    if (!std::isfinite(j)) fail(ErrorKind::Numeric, "autoencoder cost is not finite");

    // d/dz of the output layer for the (1/m) sum of squared errors.
    const Matrix delta_out =
        (2.0 / m) * diff.cwiseProduct(fw.output.cwiseProduct((1.0 - fw.output.array()).matrix()));
    const Vector sparsity =
        (hyper.beta / m) * ((-rho / clamped.array()) + (1.0 - rho) / (1.0 - clamped.array())).matrix();
    const Matrix delta_hidden =
        ((params.w2.transpose() * delta_out).colwise() + sparsity)
            .cwiseProduct(fw.hidden.cwiseProduct((1.0 - fw.hidden.array()).matrix()));

    const Matrix gw1 = delta_hidden * batch.transpose() + 2.0 * hyper.lambda * params.w1;
    const Vector gb1 = delta_hidden.rowwise().sum();
    const Matrix gw2 = delta_out * fw.hidden.transpose() + 2.0 * hyper.lambda * params.w2;
    const Vector gb2 = delta_out.rowwise().sum();
    grad = AutoencoderParams{gw1, gb1, gw2, gb2}.flatten();
    return j;
}

Vector gradient(const AutoencoderParams& params, const Matrix& batch, const SparsityHyper& hyper) {
    Vector g;
    cost_and_gradient(params, batch, hyper, g);
    return g;
}

AutoencoderParams init_params(int input_dim, int hidden_dim, std::uint64_t seed) {
    require(input_dim >= 1 && hidden_dim >= 1, "init_params: dimensions must be positive");
    const double r = std::sqrt(6.0) / std::sqrt(static_cast<double>(input_dim + hidden_dim + 1));
    Rng rng(seed);
    AutoencoderParams p = AutoencoderParams::zeros(input_dim, hidden_dim);
    for (int i = 0; i < hidden_dim; ++i)
        for (int j = 0; j < input_dim; ++j) p.w1(i, j) = rng.uniform(-r, r);
    for (int i = 0; i < input_dim; ++i)
        for (int j = 0; j < hidden_dim; ++j) p.w2(i, j) = rng.uniform(-r, r);
    return p;
}

std::pair<AutoencoderParams, TrainReport> train_lbfgs(const AutoencoderParams& init,
                                                      const Matrix& batch,
                                                      const SparsityHyper& hyper,
                                                      const TrainOptions& options,
                                                      const TrainSnapshot& snapshot) {
    check_batch(init, batch);
    hyper.validate();
    require(options.max_iterations >= 0, "train_lbfgs: max_iterations must be non-negative");
    const int in = init.input_dim();
    const int hid = init.hidden_dim();

    TrainReport report;
    if (options.max_iterations == 0) {
        Vector g;
        report.final_cost = cost_and_gradient(init, batch, hyper, g);
        report.final_gradient_norm = g.norm();
        return {init, report};
    }

    Objective objective = [&](const Vector& theta, Vector& grad) {
        return cost_and_gradient(AutoencoderParams::unflatten(theta, in, hid), batch, hyper, grad);
    };
    LbfgsOptions opt;
    opt.max_iterations = options.max_iterations;
    opt.memory = options.memory;
    StepCallback on_step;
    if (snapshot)
        on_step = [&](int it, const Vector& theta, double) {
            snapshot(it, AutoencoderParams::unflatten(theta, in, hid));
        };

    LbfgsResult res = minimize_lbfgs(objective, init.flatten(), opt, on_step);
    report.iterations_run = res.iterations;
    report.cost_trace = std::move(res.cost_trace);
    report.final_gradient_norm = res.gradient_norm;
    report.final_cost = res.cost;
    report.status = res.status;
    return {AutoencoderParams::unflatten(res.x, in, hid), report};
}

}  // namespace fvein
