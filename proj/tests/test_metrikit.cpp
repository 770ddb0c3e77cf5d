#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "poisonlab/metrikit.hpp"

using namespace metrikit;

TEST_CASE("epoch_gradient_stats worked example") {
    std::vector<double> clean_sum{2.0, 0.0};
    std::vector<double> poison_sum{0.0, 3.0};
    GradStats s = epoch_gradient_stats(clean_sum, 2, poison_sum, 1);
    CHECK(s.clean_mean_norm == doctest::Approx(1.0));
    CHECK(s.poison_mean_norm == doctest::Approx(3.0));
    CHECK(s.magnitude_ratio == doctest::Approx(3.0));
    CHECK(s.cosine == doctest::Approx(0.0));
    CHECK(!s.cosine_degenerate);

    std::vector<double> anti{-4.0, 0.0};
    GradStats a = epoch_gradient_stats(clean_sum, 2, anti, 2);
    CHECK(a.cosine == doctest::Approx(-1.0));
    CHECK(a.magnitude_ratio == doctest::Approx(2.0));
}

TEST_CASE("epoch_gradient_stats degenerate and invalid cases") {
    std::vector<double> zero{0.0, 0.0};
    std::vector<double> some{1.0, 1.0};
    GradStats s = epoch_gradient_stats(zero, 3, some, 1);
    CHECK(s.cosine_degenerate);
    CHECK(s.cosine == 0.0);
    CHECK(s.clean_mean_norm == 0.0);

    CHECK_THROWS_AS(epoch_gradient_stats(some, 0, some, 1), undefined_stats);
    CHECK_THROWS_AS(epoch_gradient_stats(some, 1, some, 0), undefined_stats);
}

TEST_CASE("rad arithmetic") {
    CHECK(rad(0.9, 0.45) == doctest::Approx(0.5));
    CHECK(rad(0.8, 0.8) == doctest::Approx(0.0));
    CHECK(rad(0.5, 0.6) == doctest::Approx(-0.2));
    CHECK_THROWS_AS(rad(0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(rad(-0.1, 0.5), std::invalid_argument);
}

TEST_CASE("success_summary aggregates") {
    std::vector<attackkit::AttackReport> reports(4);
    reports[0].success = true;
    reports[0].poisons_used = 2;
    reports[1].success = false;
    reports[1].poisons_used = 5;
    reports[2].success = true;
    reports[2].poisons_used = 4;
    reports[3].success = false;
    SuccessSummary s = success_summary(reports);
    CHECK(s.success_rate == doctest::Approx(0.5));
    REQUIRE(s.mean_poisons_over_successes.has_value());
    CHECK(*s.mean_poisons_over_successes == doctest::Approx(3.0));

    std::vector<attackkit::AttackReport> none(2);
    SuccessSummary ns = success_summary(none);
    CHECK(ns.success_rate == 0.0);
    CHECK(!ns.mean_poisons_over_successes.has_value());

    CHECK_THROWS_AS(success_summary(std::vector<attackkit::AttackReport>{}),
                    std::invalid_argument);
}

TEST_CASE("boundary_grid lattice and zero-parameter model") {
    modelkit::Model m = modelkit::make_lr(2, 2);
    BoundaryBounds b{-1.0, 1.0, 0.0, 2.0};
    BoundaryGrid g = boundary_grid(m, b, 5);
    CHECK(g.predicted.size() == 25);
    CHECK(g.x_at(0) == doctest::Approx(-1.0));
    CHECK(g.x_at(4) == doctest::Approx(1.0));
    CHECK(g.y_at(2) == doctest::Approx(1.0));
    for (int p : g.predicted) CHECK(p == 0);
    for (double c : g.confidence) CHECK(c == doctest::Approx(0.5));

    modelkit::Model wrong = modelkit::make_lr(3, 2);
    CHECK_THROWS_AS(boundary_grid(wrong, b, 5), std::invalid_argument);
    CHECK_THROWS_AS(boundary_grid(m, b, 1), std::invalid_argument);
}

TEST_CASE("boundary_grid splits a known linear boundary") {
    // Weights (1, 0) vs (-1, 0): class 1 wherever x < 0.
    modelkit::Model m = modelkit::make_lr(2, 2);
    m.params = {1.0, 0.0, -1.0, 0.0, 0.0, 0.0};
    BoundaryBounds b{-1.0, 1.0, -1.0, 1.0};
    BoundaryGrid g = boundary_grid(m, b, 11);
    for (int row = 0; row < 11; ++row)
        for (int col = 0; col < 11; ++col) {
            int expect = g.x_at(col) < 0.0 ? 1 : 0;
            CHECK(g.predicted[std::size_t(row * 11 + col)] == expect);
        }
}

TEST_CASE("pca_2d recovers planted principal axes") {
    // Symmetric points along e1 (amplitude 3) and e3 (amplitude 1) in R^4:
    // the exact covariance is diag(4.5, 0, 0.5, 0) and the components must
    // hit those axes. Offsets on e2/e4 exercise the centering.
    std::vector<double> vals;
    const std::size_t n = 8;
    for (int rep = 0; rep < 2; ++rep) {
        for (double a : {3.0, -3.0}) vals.insert(vals.end(), {a, 7.0, 0.0, -2.0});
        for (double a : {1.0, -1.0}) vals.insert(vals.end(), {0.0, 7.0, a, -2.0});
    }
    numkit::Tensor X({n, 4}, vals);
    Pca2d p = pca_2d(X);

    CHECK(p.components[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(p.components[4 + 2] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(p.components[1]) < 1e-6);
    CHECK(std::abs(p.components[4 + 1]) < 1e-6);
    CHECK(p.var1 > p.var2);
    CHECK(p.var1 == doctest::Approx(4.5).epsilon(1e-6));
    CHECK(p.var2 == doctest::Approx(0.5).epsilon(1e-6));

    // Orthonormality.
    double n1 = 0, n2 = 0, d12 = 0;
    for (int j = 0; j < 4; ++j) {
        n1 += p.components[std::size_t(j)] * p.components[std::size_t(j)];
        n2 += p.components[std::size_t(4 + j)] * p.components[std::size_t(4 + j)];
        d12 += p.components[std::size_t(j)] * p.components[std::size_t(4 + j)];
    }
    CHECK(n1 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(n2 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(d12) < 1e-6);

    // project() agrees with the stored projection.
    auto row0 = X.row(0);
    auto proj = p.project(row0);
    CHECK(proj[0] == doctest::Approx(p.projected[0]).epsilon(1e-9));
    CHECK(proj[1] == doctest::Approx(p.projected[1]).epsilon(1e-9));

    // Mean of projections is zero.
    double m1 = 0, m2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        m1 += p.projected[i * 2];
        m2 += p.projected[i * 2 + 1];
    }
    CHECK(std::abs(m1 / double(n)) < 1e-9);
    CHECK(std::abs(m2 / double(n)) < 1e-9);
}

TEST_CASE("kmeans recovers well-separated clusters") {
    numkit::Rng rng(9);
    std::vector<std::pair<double, double>> centers{{0, 0}, {10, 0}, {0, 10}};
    const std::size_t per = 40;
    std::vector<double> vals;
    for (auto [cx, cy] : centers)
        for (std::size_t i = 0; i < per; ++i) {
            vals.push_back(cx + 0.2 * rng.next_gaussian());
            vals.push_back(cy + 0.2 * rng.next_gaussian());
        }
    numkit::Tensor X({3 * per, 2}, vals);
    KMeansResult r = kmeans(X, 3, 1);
    REQUIRE(r.assignments.size() == 3 * per);
    // Each planted cluster lands in one k-means cluster, all three distinct.
    std::set<int> labels;
    for (std::size_t c = 0; c < 3; ++c) {
        int first = r.assignments[c * per];
        labels.insert(first);
        for (std::size_t i = 0; i < per; ++i) CHECK(r.assignments[c * per + i] == first);
    }
    CHECK(labels.size() == 3);

    // Inertia equals the brute-force recomputation from the returned result.
    double expect = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        auto p = X.row(i);
        int a = r.assignments[i];
        double dx = p[0] - r.centroids[std::size_t(a) * 2];
        double dy = p[1] - r.centroids[std::size_t(a) * 2 + 1];
        expect += dx * dx + dy * dy;
    }
    CHECK(r.inertia == doctest::Approx(expect).epsilon(1e-9));

    CHECK_THROWS_AS(kmeans(X, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(kmeans(numkit::Tensor({2, 3}, std::vector<double>(6, 0.0)), 2, 1),
                    std::invalid_argument);
}

TEST_CASE("kmeans is deterministic in its seed") {
    auto [ds, _] = datakit::two_moons(200, 10, 0.1, 4);
    KMeansResult a = kmeans(ds.inputs, 4, 11);
    KMeansResult b = kmeans(ds.inputs, 4, 11);
    CHECK(a.assignments == b.assignments);
    CHECK(a.centroids == b.centroids);
    CHECK(a.inertia == b.inertia);
}

TEST_CASE("split_accuracy scores partitions separately") {
    // Model predicts class 1 iff x0 > 0.5 (via weights).
    modelkit::Model m = modelkit::make_lr(2, 2);
    m.params = {-1.0, 0.0, 1.0, 0.0, 0.5, -0.5};
    datakit::Dataset base;
    base.inputs = numkit::Tensor({4, 2}, {0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0});
    base.labels = {0, 1, 0, 0};
    base.num_classes = 2;
    base.name = "t";
    datakit::PoisonedDataset ds{base, {0, 0, 1, 1}};
    auto [clean_acc, poison_acc] = split_accuracy(m, ds);
    // Clean rows (0,0)->0 correct, (1,0)->1 correct; poison rows scored on
    // poison labels: (1,1)->predict 1, label 0 wrong; (0,1)->predict 0, label 0 right.
    CHECK(clean_acc == doctest::Approx(1.0));
    CHECK(poison_acc == doctest::Approx(0.5));

    datakit::PoisonedDataset all_poison{base, {1, 1, 1, 1}};
    CHECK_THROWS_AS(split_accuracy(m, all_poison), std::invalid_argument);
}

TEST_CASE("csv writers emit headers and rows") {
    auto dir = std::filesystem::temp_directory_path() / "poisonlab_metrikit_test";
    std::filesystem::create_directories(dir);

    numkit::Tensor pts({2, 2}, {1.0, 2.0, 3.0, 4.0});
    std::string pp = (dir / "pts.csv").string();
    save_points_csv(pts, {0, 1}, pp);
    std::ifstream in(pp);
    std::string header;
    std::getline(in, header);
    CHECK(header.find("label") != std::string::npos);
    std::string line;
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);

    modelkit::Model m = modelkit::make_lr(2, 2);
    BoundaryGrid g = boundary_grid(m, {0, 1, 0, 1}, 3);
    std::string bp = (dir / "grid.csv").string();
    save_boundary_csv(g, bp);
    std::ifstream bin(bp);
    int blines = 0;
    while (std::getline(bin, line))
        if (!line.empty()) ++blines;
    CHECK(blines == 1 + 9);
}
