#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "fvein/numerics.hpp"

namespace fvein {

// Monotone piecewise-linear intensity remap. The first control point sits at
// input 0 and the last at input 1; inputs strictly increase and outputs never
// decrease, so the remap cannot invert intensity order.
class RemapCurve {
public:
    struct Point {
        double in;
        double out;
        bool operator==(const Point&) const = default;
    };

    RemapCurve() = default;
    explicit RemapCurve(std::vector<Point> points);

    static RemapCurve identity(int control_points = 2);
    static RemapCurve constant(double value, int control_points = 2);

    const std::vector<Point>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }

    double operator()(double t) const;

    // Throws invalid-input when the monotonicity/range invariants fail.
    void validate() const;

    bool operator==(const RemapCurve&) const = default;

private:
    std::vector<Point> points_;
};

struct GaConfig {
    int population_size = 30;
    int generations = 50;
    double crossover_rate = 0.8;
    double mutation_rate = 0.1;
    double mutation_sigma = 0.05;
    int elitism_count = 2;
    int tournament_size = 3;
    int control_points = 8;
    std::uint64_t seed = 1;

    void validate() const;
};

// Best-of-run curve plus the best fitness present in each generation's
// population (index 0 is the initial population).
struct GaResult {
    RemapCurve best;
    double best_fitness = -std::numeric_limits<double>::infinity();
    std::vector<double> population_best;
};

inline constexpr double kLowestFitness = -std::numeric_limits<double>::infinity();

GrayImage apply_remap(const GrayImage& image, const RemapCurve& curve);

// Interior pixels whose 3x3 Sobel gradient magnitude exceeds the threshold.
long sobel_edge_count(const GrayImage& image, double magnitude_threshold);

// log(log(sum of remapped intensities) * edge count), natural log. Degenerate
// remaps (sum <= 1 or no edges) score kLowestFitness.
double fitness(const GrayImage& image, const RemapCurve& curve, double magnitude_threshold);

// Mean fitness over a sample set; any degenerate image makes the mean degenerate.
double mean_fitness(std::span<const GrayImage> images, const RemapCurve& curve,
                    double magnitude_threshold);

GaResult evolve_detailed(std::span<const GrayImage> sample_images, const GaConfig& config,
                         double magnitude_threshold);

RemapCurve evolve(std::span<const GrayImage> sample_images, const GaConfig& config,
                  double magnitude_threshold);

}  // namespace fvein
