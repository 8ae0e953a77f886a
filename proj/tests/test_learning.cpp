#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "efhc/learning.hpp"
#include "support/gradient_check.hpp"

using namespace efhc;

namespace {

Shard single_point_shard(Vec x, int y = 0) {
  Shard s;
  s.points.push_back({std::move(x), y});
  return s;
}

}  // namespace

TEST_CASE("quadratic loss vanishes at the center") {
  TaskSpec task{TaskKind::Quadratic, 3, 2, 0.0};
  const Vec c = {0.4, -1.0, 2.5};
  const Shard shard = single_point_shard(c);
  CHECK(local_loss(task, c, shard) == 0.0);
  CHECK(local_loss(task, Vec{0.4, -1.0, 3.5}, shard) == doctest::Approx(0.5));
}

TEST_CASE("hinge loss at w = 0 is one per class") {
  TaskSpec task{TaskKind::Hinge, 3, 2, 0.0};
  const Shard shard = single_point_shard(Vec{0.2, -0.3, 0.9}, 1);
  const Vec w(static_cast<std::size_t>(task.dim()), 0.0);
  // All scores are zero, so both one-vs-all margins are violated by exactly 1.
  CHECK(local_loss(task, w, shard) == doctest::Approx(2.0));
}

TEST_CASE("logistic loss with uniform logits is log(C)") {
  TaskSpec task{TaskKind::Logistic, 5, 10, 0.0};
  const Shard shard = single_point_shard(Vec{1.0, 2.0, -0.5, 0.0, 0.3}, 4);
  const Vec w(static_cast<std::size_t>(task.dim()), 0.0);
  CHECK(local_loss(task, w, shard) == doctest::Approx(std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("full-batch quadratic gradient is w - c") {
  TaskSpec task{TaskKind::Quadratic, 3, 2, 0.0};
  const Vec c = {1.0, 2.0, 3.0};
  const Shard shard = single_point_shard(c);
  const Vec w = {0.0, 5.0, 3.0};
  Rng rng(1);
  const Vec g = stochastic_gradient(task, w, shard, 1, rng);
  CHECK(g[0] == doctest::Approx(-1.0));
  CHECK(g[1] == doctest::Approx(3.0));
  CHECK(g[2] == doctest::Approx(0.0));
}

TEST_CASE("full batch is independent of the rng state") {
  TaskSpec task{TaskKind::Logistic, 4, 3, 1e-3};
  auto [train, test] = make_synthetic_classification(3, 4, 10, 1.0, 5);
  Vec w(static_cast<std::size_t>(task.dim()));
  Rng wrng(3);
  for (double& v : w) v = 2.0 * uniform_double(wrng) - 1.0;
  Rng r1(11), r2(22222);
  const Vec g1 = stochastic_gradient(task, w, train, static_cast<int>(train.size()), r1);
  const Vec g2 = stochastic_gradient(task, w, train, static_cast<int>(train.size()), r2);
  CHECK(g1 == g2);
}

TEST_CASE("mini-batch preconditions") {
  TaskSpec task{TaskKind::Quadratic, 2, 2, 0.0};
  const Shard shard = single_point_shard(Vec{0.0, 0.0});
  const Shard empty;
  Rng rng(1);
  const Vec w = {0.0, 0.0};
  CHECK_THROWS_AS(stochastic_gradient(task, w, empty, 1, rng), std::invalid_argument);
  CHECK_THROWS_AS(stochastic_gradient(task, w, shard, 0, rng), std::invalid_argument);
  CHECK_THROWS_AS(stochastic_gradient(task, w, shard, 2, rng), std::invalid_argument);
  CHECK_THROWS_AS(local_loss(task, Vec{1.0}, shard), std::invalid_argument);
}

TEST_CASE("gradients agree with central differences for every task kind") {
  for (TaskKind kind : {TaskKind::Quadratic, TaskKind::Hinge, TaskKind::Logistic}) {
    const testsup::FdReport rep = testsup::check_gradients(kind, 100, 555);
    CHECK(rep.checked >= 95);
    CHECK_MESSAGE(rep.max_rel_err <= 1e-5, to_string(kind));
  }
}

TEST_CASE("convexity first-order lower bound holds") {
  Rng rng(31);
  for (TaskKind kind : {TaskKind::Quadratic, TaskKind::Hinge, TaskKind::Logistic}) {
    TaskSpec task{kind, 4, 3, kind == TaskKind::Quadratic ? 0.0 : 1e-3};
    const int dim = task.dim();
    Shard shard;
    for (int p = 0; p < (kind == TaskKind::Quadratic ? 1 : 4); ++p) {
      DataPoint pt;
      pt.y = static_cast<int>(bounded_int(rng, 3));
      pt.x.resize(4);
      for (double& v : pt.x) v = 2.0 * uniform_double(rng) - 1.0;
      shard.points.push_back(std::move(pt));
    }
    for (int t = 0; t < 100; ++t) {
      Vec w(static_cast<std::size_t>(dim)), w2(static_cast<std::size_t>(dim));
      for (double& v : w) v = 2.0 * uniform_double(rng) - 1.0;
      for (double& v : w2) v = 2.0 * uniform_double(rng) - 1.0;
      Vec grad(static_cast<std::size_t>(dim), 0.0);
      for (const DataPoint& p : shard.points) add_point_gradient(task, w, p, grad);
      if (task.lambda > 0.0) axpy(task.lambda, w, grad);
      const double lhs = local_loss(task, w2, shard);
      const double rhs = local_loss(task, w, shard) + dot(grad, sub(w2, w));
      CHECK(lhs >= rhs - 1e-9);
    }
  }
}

TEST_CASE("global loss") {
  TaskSpec task{TaskKind::Quadratic, 2, 2, 0.0};
  SUBCASE("identical shards equal the local loss") {
    const Shard shard = single_point_shard(Vec{1.0, -1.0});
    const std::vector<Shard> shards(4, shard);
    const Vec w = {0.3, 0.3};
    CHECK(global_loss(task, w, shards) == doctest::Approx(local_loss(task, w, shard)));
  }
  SUBCASE("quadratic global loss is minimized at the center mean") {
    const std::vector<Shard> shards = {single_point_shard(Vec{0.0, 0.0}),
                                       single_point_shard(Vec{2.0, 0.0}),
                                       single_point_shard(Vec{1.0, 3.0})};
    const Vec mean = {1.0, 1.0};
    const double at_mean = global_loss(task, mean, shards);
    for (const Vec& other : {Vec{1.1, 1.0}, Vec{1.0, 0.9}, Vec{0.0, 0.0}})
      CHECK(global_loss(task, other, shards) > at_mean);
  }
  SUBCASE("value matches a direct summation oracle at w = 0") {
    auto [train, test] = make_synthetic_classification(3, 4, 9, 1.0, 21);
    const std::vector<Shard> shards = partition_noniid(train, 3, 1, 5);
    TaskSpec cls{TaskKind::Logistic, 4, 3, 1e-3};
    const Vec w(static_cast<std::size_t>(cls.dim()), 0.0);
    double expect = 0.0;
    for (const Shard& sh : shards) {
      double s = 0.0;
      for (const DataPoint& p : sh.points) s += point_loss(cls, w, p);
      expect += s;  // lambda term is zero at w = 0
    }
    expect /= 3.0;
    CHECK(global_loss(cls, w, shards) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("accuracy") {
  TaskSpec task{TaskKind::Hinge, 1, 2, 0.0};
  SUBCASE("perfect separator scores 1") {
    Shard test;
    test.points.push_back({Vec{-1.0}, 0});
    test.points.push_back({Vec{2.0}, 1});
    // class 0 score = -x, class 1 score = +x
    const Vec w = {-1.0, 0.0, 1.0, 0.0};
    CHECK(accuracy(task, w, test) == 1.0);
  }
  SUBCASE("zero weights break ties toward class 0") {
    Shard test;
    test.points.push_back({Vec{1.0}, 0});
    test.points.push_back({Vec{2.0}, 0});
    test.points.push_back({Vec{3.0}, 1});
    test.points.push_back({Vec{4.0}, 1});
    const Vec w(4, 0.0);
    CHECK(accuracy(task, w, test) == doctest::Approx(0.5));
  }
  SUBCASE("matches a per-point argmax oracle") {
    TaskSpec cls{TaskKind::Logistic, 5, 4, 0.0};
    auto [train, test] = make_synthetic_classification(4, 5, 20, 2.0, 9);
    Vec w(static_cast<std::size_t>(cls.dim()));
    Rng rng(77);
    for (double& v : w) v = 2.0 * uniform_double(rng) - 1.0;

    std::size_t correct = 0;
    const int block = cls.n_features + 1;
    for (const DataPoint& p : test.points) {
      int best = 0;
      double best_s = -1e300;
      for (int c = 0; c < cls.classes; ++c) {
        double s = w[static_cast<std::size_t>(c * block + cls.n_features)];
        for (int f = 0; f < cls.n_features; ++f)
          s += w[static_cast<std::size_t>(c * block + f)] * p.x[static_cast<std::size_t>(f)];
        if (s > best_s) {
          best_s = s;
          best = c;
        }
      }
      if (best == p.y) ++correct;
    }
    CHECK(accuracy(cls, w, test) ==
          doctest::Approx(static_cast<double>(correct) / test.size()));
  }
  SUBCASE("quadratic tasks have no accuracy") {
    TaskSpec quad{TaskKind::Quadratic, 2, 2, 0.0};
    Shard test;
    test.points.push_back({Vec{0.0, 0.0}, 0});
    CHECK_THROWS_AS(accuracy(quad, Vec{0.0, 0.0}, test), std::invalid_argument);
  }
}

TEST_CASE("synthetic dataset generation") {
  SUBCASE("per_class = 0 is rejected") {
    CHECK_THROWS_AS(make_synthetic_classification(3, 4, 0, 1.0, 1), std::invalid_argument);
  }
  SUBCASE("seed reproducibility") {
    auto [a_train, a_test] = make_synthetic_classification(5, 8, 12, 1.0, 42);
    auto [b_train, b_test] = make_synthetic_classification(5, 8, 12, 1.0, 42);
    REQUIRE(a_train.size() == b_train.size());
    for (std::size_t i = 0; i < a_train.size(); ++i) {
      CHECK(a_train.points[i].x == b_train.points[i].x);
      CHECK(a_train.points[i].y == b_train.points[i].y);
    }
    auto [c_train, c_test] = make_synthetic_classification(5, 8, 12, 1.0, 43);
    CHECK(a_train.points[0].x != c_train.points[0].x);
  }
  SUBCASE("a centrally trained linear model separates the default spread") {
    auto [train, test] = make_synthetic_classification(10, 64, 50, 1.0, 42);
    TaskSpec task{TaskKind::Logistic, 64, 10, 1e-4};
    const std::vector<Shard> shards = {train};
    const OracleResult oracle = centralized_oracle(task, shards, 5e-2, 2000);
    CHECK(accuracy(task, oracle.w, test) >= 0.95);
  }
}

TEST_CASE("idx loader") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "efhc_idx_test";
  fs::create_directories(dir);

  auto write_bytes = [](const fs::path& p, const std::vector<unsigned char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  };

  // One 2x2 image with pixels (0, 128, 255, 64) and label 7, built byte by byte.
  const std::vector<unsigned char> img_bytes = {
      0, 0, 8, 3,  // magic 0x00000803
      0, 0, 0, 1,  // 1 image
      0, 0, 0, 2,  // rows
      0, 0, 0, 2,  // cols
      0, 128, 255, 64};
  const std::vector<unsigned char> lab_bytes = {
      0, 0, 8, 1,  // magic 0x00000801
      0, 0, 0, 1,  // 1 label
      7};

  SUBCASE("handcrafted fixture parses exactly") {
    write_bytes(dir / "img", img_bytes);
    write_bytes(dir / "lab", lab_bytes);
    const Shard s = load_idx_dataset((dir / "img").string(), (dir / "lab").string());
    REQUIRE(s.size() == 1);
    CHECK(s.points[0].y == 7);
    REQUIRE(s.points[0].x.size() == 4);
    CHECK(s.points[0].x[0] == 0.0);
    CHECK(s.points[0].x[1] == doctest::Approx(128.0 / 255.0));
    CHECK(s.points[0].x[2] == 1.0);
    CHECK(s.points[0].x[3] == doctest::Approx(64.0 / 255.0));
  }
  SUBCASE("wrong magic is rejected") {
    auto bad = img_bytes;
    bad[3] = 9;
    write_bytes(dir / "img_bad", bad);
    write_bytes(dir / "lab", lab_bytes);
    CHECK_THROWS_WITH_AS(
        load_idx_dataset((dir / "img_bad").string(), (dir / "lab").string()),
        doctest::Contains("magic"), std::runtime_error);
  }
  SUBCASE("empty file is rejected") {
    write_bytes(dir / "empty", {});
    write_bytes(dir / "lab", lab_bytes);
    CHECK_THROWS_AS(load_idx_dataset((dir / "empty").string(), (dir / "lab").string()),
                    std::runtime_error);
  }
  SUBCASE("count mismatch is rejected") {
    auto two_labels = lab_bytes;
    two_labels[7] = 2;
    two_labels.push_back(3);
    write_bytes(dir / "img", img_bytes);
    write_bytes(dir / "lab2", two_labels);
    CHECK_THROWS_WITH_AS(load_idx_dataset((dir / "img").string(), (dir / "lab2").string()),
                         doctest::Contains("mismatch"), std::runtime_error);
  }
  SUBCASE("truncated pixel data is rejected") {
    auto truncated = img_bytes;
    truncated.pop_back();
    write_bytes(dir / "img_trunc", truncated);
    write_bytes(dir / "lab", lab_bytes);
    CHECK_THROWS_WITH_AS(
        load_idx_dataset((dir / "img_trunc").string(), (dir / "lab").string()),
        doctest::Contains("truncated"), std::runtime_error);
  }
}

TEST_CASE("non-iid partition") {
  SUBCASE("one label per device covers all labels") {
    auto [train, test] = make_synthetic_classification(10, 4, 10, 1.0, 31);
    const std::vector<Shard> shards = partition_noniid(train, 10, 1, 8);
    std::vector<int> seen;
    for (const Shard& sh : shards) {
      REQUIRE_FALSE(sh.empty());
      const int label = sh.points[0].y;
      for (const DataPoint& p : sh.points) CHECK(p.y == label);
      seen.push_back(label);
    }
    std::sort(seen.begin(), seen.end());
    for (int c = 0; c < 10; ++c) CHECK(seen[static_cast<std::size_t>(c)] == c);
  }
  SUBCASE("labels_per_device = C gives every device all labels") {
    auto [train, test] = make_synthetic_classification(4, 3, 8, 1.0, 17);
    const std::vector<Shard> shards = partition_noniid(train, 3, 4, 6);
    for (const Shard& sh : shards) {
      std::vector<int> labels;
      for (const DataPoint& p : sh.points) labels.push_back(p.y);
      std::sort(labels.begin(), labels.end());
      labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
      CHECK(labels.size() == 4);
    }
  }
  SUBCASE("partition conserves the dataset as a multiset") {
    auto [train, test] = make_synthetic_classification(6, 5, 13, 1.0, 23);
    const std::vector<Shard> shards = partition_noniid(train, 4, 2, 91);

    auto key = [](const DataPoint& p) {
      std::ostringstream os;
      os << p.y;
      for (double v : p.x) os << ',' << v;
      return os.str();
    };
    std::vector<std::string> original, partitioned;
    for (const DataPoint& p : train.points) original.push_back(key(p));
    std::size_t total = 0;
    for (const Shard& sh : shards) {
      total += sh.size();
      for (const DataPoint& p : sh.points) partitioned.push_back(key(p));
    }
    CHECK(total == train.size());
    std::sort(original.begin(), original.end());
    std::sort(partitioned.begin(), partitioned.end());
    CHECK(original == partitioned);
  }
  SUBCASE("a device that would be empty is an error") {
    Shard tiny;
    tiny.points.push_back({Vec{0.0}, 0});
    CHECK_THROWS_AS(partition_noniid(tiny, 2, 1, 3), std::runtime_error);
  }
}

TEST_CASE("centralized oracle") {
  SUBCASE("quadratic closed form") {
    TaskSpec task{TaskKind::Quadratic, 2, 2, 0.0};
    const std::vector<Shard> shards = {single_point_shard(Vec{0.0, 0.0}),
                                       single_point_shard(Vec{2.0, 0.0})};
    const OracleResult res = centralized_oracle(task, shards, 1e-12);
    CHECK(res.w[0] == doctest::Approx(1.0));
    CHECK(res.w[1] == doctest::Approx(0.0));
    // Direct evaluation: (1/2) * (0.5*1 + 0.5*1) = 0.5.
    CHECK(res.loss == doctest::Approx(0.5));
    CHECK(res.loss == doctest::Approx(global_loss(task, res.w, shards)));
  }
  SUBCASE("single device returns its local minimizer") {
    TaskSpec task{TaskKind::Quadratic, 3, 2, 0.0};
    const Vec c = {0.5, -2.0, 1.0};
    const std::vector<Shard> shards = {single_point_shard(c)};
    const OracleResult res = centralized_oracle(task, shards, 1e-12);
    for (int d = 0; d < 3; ++d) CHECK(res.w[static_cast<std::size_t>(d)] == doctest::Approx(c[static_cast<std::size_t>(d)]));
    CHECK(res.loss == doctest::Approx(0.0));
  }
  SUBCASE("regularized logistic descent reaches the gradient tolerance") {
    TaskSpec task{TaskKind::Logistic, 4, 3, 1e-2};
    auto [train, test] = make_synthetic_classification(3, 4, 15, 1.0, 12);
    const std::vector<Shard> shards = partition_noniid(train, 3, 1, 4);
    const double tol = 1e-6;
    const OracleResult res = centralized_oracle(task, shards, tol, 50000);

    Vec g(static_cast<std::size_t>(task.dim()), 0.0);
    for (const Shard& sh : shards)
      for (const DataPoint& p : sh.points) add_point_gradient(task, res.w, p, g);
    scale(g, 1.0 / 3.0);
    axpy(task.lambda, res.w, g);
    CHECK(norm2(g) <= tol);
  }
  SUBCASE("budget exhaustion throws") {
    TaskSpec task{TaskKind::Logistic, 4, 3, 1e-4};
    auto [train, test] = make_synthetic_classification(3, 4, 15, 1.0, 12);
    const std::vector<Shard> shards = {train};
    CHECK_THROWS_AS(centralized_oracle(task, shards, 1e-14, 3), std::runtime_error);
  }
}

TEST_CASE("gradient bound estimation") {
  TaskSpec task{TaskKind::Quadratic, 4, 2, 0.0};
  const std::vector<Shard> shards = make_quadratic_shards(5, 4, 1.0, 77);
  const double radius = 1.0;

  SUBCASE("quadratic estimate respects the analytic bound") {
    // ||grad||_inf = ||w - c||_inf <= radius + max_i ||c_i||_inf, inflated 2x.
    double cmax = 0.0;
    for (const Shard& sh : shards) cmax = std::max(cmax, norm_inf(sh.points[0].x));
    const GradientBounds b = estimate_gradient_bounds(task, shards, 200, 5, radius);
    CHECK(b.linf <= 2.0 * (radius + cmax));
    CHECK(b.linf > 0.0);
    CHECK(b.l2_max >= b.linf / 2.0);
  }
  SUBCASE("deterministic per seed") {
    const GradientBounds a = estimate_gradient_bounds(task, shards, 64, 9, radius);
    const GradientBounds b = estimate_gradient_bounds(task, shards, 64, 9, radius);
    CHECK(a.linf == b.linf);
    CHECK(a.per_device_l2 == b.per_device_l2);
  }
  SUBCASE("monotone nondecreasing in sample count") {
    double prev = 0.0;
    for (int count : {8, 16, 32, 64, 128}) {
      const GradientBounds b = estimate_gradient_bounds(task, shards, count, 9, radius);
      CHECK(b.linf >= prev);
      prev = b.linf;
    }
  }
}

TEST_CASE("shard csv export") {
  Shard s;
  s.points.push_back({Vec{1.5, -2.0}, 3});
  std::ostringstream os;
  write_shard_csv(os, s);
  CHECK(os.str() == "3,1.5,-2\n");
}
