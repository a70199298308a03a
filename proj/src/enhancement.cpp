#include "fvein/enhancement.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fvein/error.hpp"
#include "fvein/parallel.hpp"
#include "fvein/rng.hpp"

namespace fvein {

RemapCurve::RemapCurve(std::vector<Point> points) : points_(std::move(points)) { validate(); }

RemapCurve RemapCurve::identity(int control_points) {
    require(control_points >= 2, "RemapCurve: need at least 2 control points");
    std::vector<Point> pts(static_cast<std::size_t>(control_points));
    for (int i = 0; i < control_points; ++i) {
        const double t = static_cast<double>(i) / (control_points - 1);
        pts[static_cast<std::size_t>(i)] = {t, t};
    }
    return RemapCurve(std::move(pts));
}

RemapCurve RemapCurve::constant(double value, int control_points) {
    RemapCurve c = identity(control_points);
    for (auto& p : c.points_) p.out = value;
    c.validate();
    return c;
}

void RemapCurve::validate() const {
    require(points_.size() >= 2, "RemapCurve: need at least 2 control points");
    require(points_.front().in == 0.0 && points_.back().in == 1.0,
            "RemapCurve: endpoints must sit at inputs 0 and 1");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto& p = points_[i];
        require(p.out >= 0.0 && p.out <= 1.0 && std::isfinite(p.out),
                "RemapCurve: output coordinate outside [0,1]");
        if (i > 0) {
            require(p.in > points_[i - 1].in, "RemapCurve: inputs must strictly increase");
            require(p.out >= points_[i - 1].out, "RemapCurve: outputs must not decrease");
        }
    }
}

double RemapCurve::operator()(double t) const {
    if (t <= 0.0) return points_.front().out;
    if (t >= 1.0) return points_.back().out;
    const auto it = std::upper_bound(points_.begin(), points_.end(), t,
                                     [](double v, const Point& p) { return v < p.in; });
    const Point& hi = *it;
    const Point& lo = *(it - 1);
    const double f = (t - lo.in) / (hi.in - lo.in);
    return lo.out + f * (hi.out - lo.out);
}

void GaConfig::validate() const {
    require(population_size >= 1, "ga: population_size must be positive");
    require(generations >= 0, "ga: generations must be non-negative");
    require(crossover_rate >= 0.0 && crossover_rate <= 1.0, "ga: crossover_rate must be in [0,1]");
    require(mutation_rate >= 0.0 && mutation_rate <= 1.0, "ga: mutation_rate must be in [0,1]");
    require(mutation_sigma > 0.0, "ga: mutation_sigma must be positive");
    require(elitism_count >= 0 && elitism_count < population_size,
            "ga: elitism_count must be in [0, population_size)");
    require(tournament_size >= 1, "ga: tournament_size must be positive");
    require(control_points >= 2, "ga: control_points must be >= 2");
}

GrayImage apply_remap(const GrayImage& image, const RemapCurve& curve) {
    GrayImage out(image.height(), image.width());
    for (Eigen::Index i = 0; i < image.pixels.size(); ++i) {
        const double p = image.pixels.data()[i];
        require(p >= 0.0 && p <= 1.0, "apply_remap: pixel outside [0,1]");
        out.pixels.data()[i] = curve(p);
    }
    return out;
}

long sobel_edge_count(const GrayImage& image, double magnitude_threshold) {
    require(image.height() >= 3 && image.width() >= 3, "sobel_edge_count: image smaller than 3x3");
    const auto& p = image.pixels;
    const double thr2 = magnitude_threshold * magnitude_threshold;
    long count = 0;
    for (Eigen::Index r = 1; r + 1 < p.rows(); ++r) {
        for (Eigen::Index c = 1; c + 1 < p.cols(); ++c) {
            const double gx = (p(r - 1, c + 1) + 2 * p(r, c + 1) + p(r + 1, c + 1)) -
                              (p(r - 1, c - 1) + 2 * p(r, c - 1) + p(r + 1, c - 1));
            const double gy = (p(r + 1, c - 1) + 2 * p(r + 1, c) + p(r + 1, c + 1)) -
                              (p(r - 1, c - 1) + 2 * p(r - 1, c) + p(r - 1, c + 1));
            if (gx * gx + gy * gy > thr2) ++count;
        }
    }
    return count;
}

double fitness(const GrayImage& image, const RemapCurve& curve, double magnitude_threshold) {
    require(!image.empty(), "fitness: empty image");
    const GrayImage enhanced = apply_remap(image, curve);
    const double energy = enhanced.pixels.sum();
    if (energy <= 1.0) return kLowestFitness;
    const long edges = sobel_edge_count(enhanced, magnitude_threshold);
    const double inner = std::log(energy) * static_cast<double>(edges);
    if (!(inner > 0.0)) return kLowestFitness;
    return std::log(inner);
}

double mean_fitness(std::span<const GrayImage> images, const RemapCurve& curve,
                    double magnitude_threshold) {
    require(!images.empty(), "mean_fitness: no images");
    double total = 0.0;
    for (const auto& img : images) {
        const double f = fitness(img, curve, magnitude_threshold);
        if (f == kLowestFitness) return kLowestFitness;
        total += f;
    }
    return total / static_cast<double>(images.size());
}

namespace {

// Genome layout: interior input coordinates (K-2), then all K outputs.
using Genome = std::vector<double>;

Genome random_genome(int k, Rng& rng) {
    Genome g(static_cast<std::size_t>(2 * k - 2));
    for (auto& v : g) v = rng.uniform();
    return g;
}

RemapCurve decode(Genome g, int k) {
    const auto interior = static_cast<std::ptrdiff_t>(k - 2);
    for (auto& v : g) v = std::clamp(v, 0.0, 1.0);
    std::sort(g.begin(), g.begin() + interior);
    std::sort(g.begin() + interior, g.end());

    std::vector<RemapCurve::Point> pts(static_cast<std::size_t>(k));
    pts.front().in = 0.0;
    pts.back().in = 1.0;
    // Strictly increasing inputs: keep interior points inside a minimal gap.
    const double gap = 1e-6;
    for (int i = 1; i + 1 < k; ++i) {
        const double lo = pts[static_cast<std::size_t>(i - 1)].in + gap;
        const double hi = 1.0 - gap * (k - 1 - i);
        pts[static_cast<std::size_t>(i)].in = std::clamp(g[static_cast<std::size_t>(i - 1)], lo, hi);
    }
    for (int i = 0; i < k; ++i)
        pts[static_cast<std::size_t>(i)].out = g[static_cast<std::size_t>(interior + i)];
    return RemapCurve(std::move(pts));
}

// Re-encodes a repaired curve so genomes always match their phenotype.
Genome encode(const RemapCurve& c) {
    const int k = static_cast<int>(c.size());
    Genome g;
    g.reserve(static_cast<std::size_t>(2 * k - 2));
    for (int i = 1; i + 1 < k; ++i) g.push_back(c.points()[static_cast<std::size_t>(i)].in);
    for (const auto& p : c.points()) g.push_back(p.out);
    return g;
}

struct Individual {
    Genome genome;
    RemapCurve curve;
    double fitness = kLowestFitness;
};

std::size_t tournament(const std::vector<Individual>& pop, int size, Rng& rng) {
    std::size_t best = rng.below(pop.size());
    for (int i = 1; i < size; ++i) {
        const std::size_t cand = rng.below(pop.size());
        if (pop[cand].fitness > pop[best].fitness) best = cand;
    }
    return best;
}

void evaluate(std::vector<Individual>& pop, std::span<const GrayImage> images, double threshold) {
    parallel_for(pop.size(), [&](std::size_t i) {
        pop[i].fitness = mean_fitness(images, pop[i].curve, threshold);
    });
}

}  // namespace

GaResult evolve_detailed(std::span<const GrayImage> sample_images, const GaConfig& config,
                         double magnitude_threshold) {
    require(!sample_images.empty(), "evolve: no sample images");
    config.validate();
    const int k = config.control_points;
    Rng rng(config.seed);

    std::vector<Individual> pop(static_cast<std::size_t>(config.population_size));
    for (auto& ind : pop) {
        ind.curve = decode(random_genome(k, rng), k);
        ind.genome = encode(ind.curve);
    }
    // One identity individual, so the result never does worse than no remap.
    pop.front().curve = RemapCurve::identity(k);
    pop.front().genome = encode(pop.front().curve);
    evaluate(pop, sample_images, magnitude_threshold);

    GaResult result;
    auto track_best = [&] {
        double generation_best = kLowestFitness;
        for (const auto& ind : pop) {
            generation_best = std::max(generation_best, ind.fitness);
            if (result.best.size() == 0 || ind.fitness > result.best_fitness) {
                result.best = ind.curve;
                result.best_fitness = ind.fitness;
            }
        }
        result.population_best.push_back(generation_best);
    };
    track_best();

    const std::size_t genes = static_cast<std::size_t>(2 * k - 2);
    for (int gen = 0; gen < config.generations; ++gen) {
        // Stable ranking so elites are chosen deterministically on ties.
        std::vector<std::size_t> order(pop.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return pop[a].fitness > pop[b].fitness;
        });

        std::vector<Individual> next;
        next.reserve(pop.size());
        for (int e = 0; e < config.elitism_count; ++e) next.push_back(pop[order[static_cast<std::size_t>(e)]]);

        const auto first_child = next.size();
        while (next.size() < pop.size()) {
            Genome a = pop[tournament(pop, config.tournament_size, rng)].genome;
            Genome b = pop[tournament(pop, config.tournament_size, rng)].genome;
            if (genes > 1 && rng.uniform() < config.crossover_rate) {
                const std::size_t cut = 1 + rng.below(genes - 1);
                for (std::size_t i = cut; i < genes; ++i) std::swap(a[i], b[i]);
            }
            for (Genome* child : {&a, &b}) {
                if (next.size() >= pop.size()) break;
                for (auto& v : *child)
                    if (rng.uniform() < config.mutation_rate) v += rng.normal(0.0, config.mutation_sigma);
                Individual ind;
                ind.curve = decode(*child, k);
                ind.genome = encode(ind.curve);
                next.push_back(std::move(ind));
            }
        }

        std::vector<Individual> children(std::make_move_iterator(next.begin() + static_cast<std::ptrdiff_t>(first_child)),
                                         std::make_move_iterator(next.end()));
        evaluate(children, sample_images, magnitude_threshold);
        next.resize(first_child);
        for (auto& c : children) next.push_back(std::move(c));
        pop = std::move(next);
        track_best();
    }
    return result;
}

RemapCurve evolve(std::span<const GrayImage> sample_images, const GaConfig& config,
                  double magnitude_threshold) {
    return evolve_detailed(sample_images, config, magnitude_threshold).best;
}

}  // namespace fvein
