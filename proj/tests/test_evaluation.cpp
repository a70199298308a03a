#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "fvein/error.hpp"
#include "fvein/evaluation.hpp"
#include "oracles.hpp"

using namespace fvein;

namespace {

ScoreSet random_set(Rng& rng, int ng, int ni, double sep, bool quantize = false) {
    ScoreSet s;
    auto draw = [&](double mu) {
        const double v = rng.normal(mu, 1.0);
        return quantize ? std::round(v * 4) / 4 : v;
    };
    for (int i = 0; i < ng; ++i) s.genuine.push_back(draw(sep));
    for (int i = 0; i < ni; ++i) s.impostor.push_back(draw(0.0));
    return s;
}

std::vector<UserSamples> clustered_users(int users, int samples, double spread, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<UserSamples> out;
    for (int u = 0; u < users; ++u) {
        UserSamples us{"u" + std::to_string(u), {}};
        Vector centre = Vector::Constant(4, 10.0 * u);
        for (int s = 0; s < samples; ++s) us.vectors.push_back(centre + oracle::random_matrix(4, 1, rng, spread).col(0));
        out.push_back(std::move(us));
    }
    return out;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("perfect separation") {
    const ScoreSet s{{5, 6, 7}, {1, 2, 3}};
    const auto c = roc(s);
    bool corner = false;
    for (const auto& p : c.points) corner = corner || (p.far == 0.0 && p.tar == 1.0);
    CHECK(corner);
    CHECK(eer(c) == 0.0);
    CHECK(auc(c) == 1.0);
}

TEST_CASE("identical distributions") {
    const ScoreSet s{{1, 2, 3, 4}, {1, 2, 3, 4}};
    const auto c = roc(s);
    for (const auto& p : c.points) CHECK(p.far == p.tar);
    CHECK(eer(c) == 0.5);
    CHECK(auc(c) == 0.5);
}

TEST_CASE("roc matches counting oracle") {
    Rng rng(1);
    for (int rep = 0; rep < 20; ++rep) {
        const auto s = random_set(rng, 50, 50, 1.0, rep % 2 == 0);
        const auto c = roc(s);
        std::vector<double> th = s.genuine;
        th.insert(th.end(), s.impostor.begin(), s.impostor.end());
        std::sort(th.begin(), th.end(), std::greater<>());
        th.erase(std::unique(th.begin(), th.end()), th.end());
        REQUIRE(c.points.size() == th.size() + 1);
        CHECK(c.points.front() == RocPoint{0, 0});
        CHECK(c.points.back() == RocPoint{1, 1});
        for (std::size_t i = 0; i < th.size(); ++i) {
            const auto p = oracle::count_at(s.genuine, s.impostor, th[i]);
            CHECK(c.points[i + 1].far == p.far);
            CHECK(c.points[i + 1].tar == p.tar);
        }
    }
}

TEST_CASE("roc is monotone") {
    Rng rng(2);
    const auto c = roc(random_set(rng, 30, 80, 0.7, true));
    for (std::size_t i = 1; i < c.points.size(); ++i) {
        CHECK(c.points[i].far >= c.points[i - 1].far);
        CHECK(c.points[i].tar >= c.points[i - 1].tar);
    }
}

TEST_CASE("auc equals mann-whitney") {
    Rng rng(3);
    for (int rep = 0; rep < 30; ++rep) {
        const auto s = random_set(rng, 20 + rep, 40, 0.8, rep % 3 == 0);
        CHECK(std::abs(auc(roc(s)) - oracle::mann_whitney(s.genuine, s.impostor)) <= 1e-9);
    }
}

TEST_CASE("label swap") {
    Rng rng(4);
    const auto s = random_set(rng, 25, 35, 0.5, true);
    CHECK(std::abs(auc(roc({s.impostor, s.genuine})) - (1 - auc(roc(s)))) <= 1e-9);
}

TEST_CASE("eer invariant under increasing transforms") {
    Rng rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        const auto s = random_set(rng, 40, 60, 1.2);
        ScoreSet e = s, a = s;
        for (auto* v : {&e.genuine, &e.impostor})
            for (auto& x : *v) x = std::exp(x);
        for (auto* v : {&a.genuine, &a.impostor})
            for (auto& x : *v) x = 3.5 * x - 2.0;
        const double base = eer(roc(s));
        CHECK(std::abs(eer(roc(e)) - base) <= 1e-9);
        CHECK(std::abs(eer(roc(a)) - base) <= 1e-9);
    }
}

TEST_CASE("eer interpolates the crossing") {
    // FAR - FRR goes from -1/2 to +1/2 between two points, so the crossing sits midway.
    const ScoreSet s{{2, 4}, {1, 3}};
    const auto c = roc(s);
    const double e = eer(c);
    CHECK(e == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
}

TEST_CASE("roc rejects empty lists") {
    CHECK_THROWS_AS(roc({{}, {1.0}}), Error);
    CHECK_THROWS_AS(roc({{1.0}, {}}), Error);
}

TEST_CASE("separated users give zero error") {
    const auto users = clustered_users(2, 6, 0.5, 1);
    const auto r = run_protocol(users, {});
    CHECK(r.mean_eer == 0.0);
    CHECK(r.mean_auc == 1.0);
    CHECK(r.per_fold_eer.size() == 10);
}

TEST_CASE("protocol is deterministic and means are exact") {
    auto users = clustered_users(6, 6, 8.0, 2);
    const auto a = run_protocol(users, {});
    CHECK(a == run_protocol(users, {}));
    const double m = std::accumulate(a.per_fold_eer.begin(), a.per_fold_eer.end(), 0.0) / 10.0;
    CHECK(std::abs(m - a.mean_eer) <= 1e-12);
    ProtocolConfig other;
    other.seed = 99;
    CHECK_FALSE(run_protocol(users, other).per_fold_eer == a.per_fold_eer);
}

TEST_CASE("fold score counts") {
    const auto users = clustered_users(4, 6, 1.0, 3);
    const auto s = fold_scores(users, {}, 0);
    CHECK(s.genuine.size() == 4 * 3);
    CHECK(s.impostor.size() == 4 * 3 * 3);
}

TEST_CASE("short users are skipped and reported") {
    auto users = clustered_users(3, 6, 1.0, 4);
    users[1].vectors.resize(5);
    const auto r = run_protocol(users, {});
    REQUIRE(r.skipped_users.size() == 1);
    CHECK(r.skipped_users[0] == "u1");
    CHECK(fold_scores(users, {}, 0).genuine.size() == 2 * 3);
}

TEST_CASE("csv and tables") {
    const auto users = clustered_users(3, 6, 1.0, 5);
    const auto rep = run_protocol(users, {});
    const std::vector<SweepRow> rows{{100, 50, rep}, {200, 50, rep}, {100, 80, rep}, {200, 80, rep}};
    std::ostringstream csv;
    write_report_csv(csv, rows);
    std::istringstream in(csv.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "hidden_size,iterations,fold,eer,auc");
    int data = 0, means = 0;
    while (std::getline(in, line)) {
        ++data;
        if (line.find(",mean,") != std::string::npos) ++means;
    }
    CHECK(data == 4 * 11);
    CHECK(means == 4);

    std::ostringstream tables;
    write_report_tables(tables, rows);
    CHECK(tables.str().find("Iteration/Hidden") != std::string::npos);
    CHECK(tables.str().find("AUC (%)") != std::string::npos);
}

TEST_CASE("score interchange round trip") {
    const std::vector<LabeledScore> s{{true, "007", -12.25}, {false, "008", 0.1}, {false, "x", -1e-300}};
    std::ostringstream out;
    write_scores(out, s);
    std::istringstream in(out.str());
    const auto back = read_scores(in);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].genuine == s[i].genuine);
        CHECK(back[i].user_id == s[i].user_id);
        CHECK(back[i].score == s[i].score);
    }
    std::istringstream bad("maybe 1 2\n");
    CHECK_THROWS_AS(read_scores(bad), Error);
}

TEST_CASE("feature vector interchange round trip") {
    Rng rng(6);
    std::vector<PooledFeatureVector> v{oracle::random_matrix(5, 1, rng).col(0), oracle::random_matrix(3, 1, rng).col(0)};
    std::ostringstream out;
    write_feature_vectors(out, v);
    std::istringstream in(out.str());
    const auto back = read_feature_vectors(in);
    REQUIRE(back.size() == 2);
    CHECK(same_values(back[0], v[0]));
    CHECK(same_values(back[1], v[1]));
}

}
