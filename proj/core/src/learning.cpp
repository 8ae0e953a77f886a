#include "efhc/learning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace efhc {

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Quadratic: return "quadratic";
    case TaskKind::Hinge: return "hinge";
    case TaskKind::Logistic: return "logistic";
  }
  return "unknown";
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "quadratic") return TaskKind::Quadratic;
  if (s == "hinge") return TaskKind::Hinge;
  if (s == "logistic") return TaskKind::Logistic;
  throw std::invalid_argument("unknown task kind: " + s);
}

namespace {

void check_dim(const TaskSpec& task, std::span<const double> w) {
  if (static_cast<int>(w.size()) != task.dim())
    throw std::invalid_argument("parameter dimension mismatch: expected " +
                                std::to_string(task.dim()) + ", got " +
                                std::to_string(w.size()));
}

// Per-class score w_c . x + b_c with the class-block layout.
double class_score(const TaskSpec& task, std::span<const double> w, const Vec& x, int c) {
  const int block = task.n_features + 1;
  const std::size_t base = static_cast<std::size_t>(c) * static_cast<std::size_t>(block);
  double s = 0.0;
  for (int f = 0; f < task.n_features; ++f)
    s += w[base + static_cast<std::size_t>(f)] * x[static_cast<std::size_t>(f)];
  s += w[base + static_cast<std::size_t>(task.n_features)];  // bias
  return s;
}

std::vector<double> class_scores(const TaskSpec& task, std::span<const double> w, const Vec& x) {
  std::vector<double> s(static_cast<std::size_t>(task.classes));
  for (int c = 0; c < task.classes; ++c) s[static_cast<std::size_t>(c)] = class_score(task, w, x, c);
  return s;
}

}  // namespace

double point_loss(const TaskSpec& task, std::span<const double> w, const DataPoint& p) {
  check_dim(task, w);
  switch (task.kind) {
    case TaskKind::Quadratic: {
      double s = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double d = w[i] - p.x[i];
        s += d * d;
      }
      return 0.5 * s;
    }
    case TaskKind::Hinge: {
      // One-vs-all multiclass hinge: sum over classes of max(0, 1 - y_c s_c)
      // with y_c = +1 for the true class and -1 otherwise.
      double loss = 0.0;
      for (int c = 0; c < task.classes; ++c) {
        const double yc = (p.y == c) ? 1.0 : -1.0;
        const double margin = 1.0 - yc * class_score(task, w, p.x, c);
        if (margin > 0.0) loss += margin;
      }
      return loss;
    }
    case TaskKind::Logistic: {
      const std::vector<double> s = class_scores(task, w, p.x);
      const double smax = *std::max_element(s.begin(), s.end());
      double lse = 0.0;
      for (double v : s) lse += std::exp(v - smax);
      return smax + std::log(lse) - s[static_cast<std::size_t>(p.y)];
    }
  }
  throw std::logic_error("point_loss: unreachable");
}

void add_point_gradient(const TaskSpec& task, std::span<const double> w, const DataPoint& p,
                        Vec& g) {
  check_dim(task, w);
  if (g.size() != w.size()) throw std::invalid_argument("gradient buffer dimension mismatch");
  switch (task.kind) {
    case TaskKind::Quadratic: {
      for (std::size_t i = 0; i < w.size(); ++i) g[i] += w[i] - p.x[i];
      return;
    }
    case TaskKind::Hinge: {
      const int block = task.n_features + 1;
      for (int c = 0; c < task.classes; ++c) {
        const double yc = (p.y == c) ? 1.0 : -1.0;
        const double margin = 1.0 - yc * class_score(task, w, p.x, c);
        if (margin > 0.0) {
          const std::size_t base = static_cast<std::size_t>(c) * static_cast<std::size_t>(block);
          for (int f = 0; f < task.n_features; ++f)
            g[base + static_cast<std::size_t>(f)] -= yc * p.x[static_cast<std::size_t>(f)];
          g[base + static_cast<std::size_t>(task.n_features)] -= yc;
        }
      }
      return;
    }
    case TaskKind::Logistic: {
      std::vector<double> s = class_scores(task, w, p.x);
      const double smax = *std::max_element(s.begin(), s.end());
      double z = 0.0;
      for (double& v : s) {
        v = std::exp(v - smax);
        z += v;
      }
      const int block = task.n_features + 1;
      for (int c = 0; c < task.classes; ++c) {
        const double coef = s[static_cast<std::size_t>(c)] / z - (p.y == c ? 1.0 : 0.0);
        const std::size_t base = static_cast<std::size_t>(c) * static_cast<std::size_t>(block);
        for (int f = 0; f < task.n_features; ++f)
          g[base + static_cast<std::size_t>(f)] += coef * p.x[static_cast<std::size_t>(f)];
        g[base + static_cast<std::size_t>(task.n_features)] += coef;
      }
      return;
    }
  }
  throw std::logic_error("add_point_gradient: unreachable");
}

double local_loss(const TaskSpec& task, std::span<const double> w, const Shard& shard) {
  check_dim(task, w);
  double s = 0.0;
  for (const DataPoint& p : shard.points) s += point_loss(task, w, p);
  if (task.lambda > 0.0) {
    const double n2 = norm2(w);
    s += 0.5 * task.lambda * n2 * n2;
  }
  return s;
}

double mean_local_loss(const TaskSpec& task, std::span<const double> w, const Shard& shard) {
  if (shard.empty()) throw std::invalid_argument("mean_local_loss: empty shard");
  double s = 0.0;
  for (const DataPoint& p : shard.points) s += point_loss(task, w, p);
  s /= static_cast<double>(shard.size());
  if (task.lambda > 0.0) {
    const double n2 = norm2(w);
    s += 0.5 * task.lambda * n2 * n2;
  }
  return s;
}

Vec stochastic_gradient(const TaskSpec& task, std::span<const double> w, const Shard& shard,
                        int batch_size, Rng& rng) {
  check_dim(task, w);
  if (shard.empty()) throw std::invalid_argument("stochastic_gradient: empty shard");
  if (batch_size < 1 || batch_size > static_cast<int>(shard.size()))
    throw std::invalid_argument("stochastic_gradient: batch_size must be in [1, |shard|]");

  Vec g(w.size(), 0.0);
  if (batch_size == static_cast<int>(shard.size())) {
    for (const DataPoint& p : shard.points) add_point_gradient(task, w, p, g);
  } else {
    const std::vector<int> batch =
        sample_without_replacement(rng, static_cast<int>(shard.size()), batch_size);
    for (int idx : batch) add_point_gradient(task, w, shard.points[static_cast<std::size_t>(idx)], g);
  }
  scale(g, 1.0 / static_cast<double>(batch_size));
  if (task.lambda > 0.0) axpy(task.lambda, w, g);
  return g;
}

double global_loss(const TaskSpec& task, std::span<const double> w,
                   std::span<const Shard> shards) {
  if (shards.empty()) throw std::invalid_argument("global_loss: no shards");
  double s = 0.0;
  for (const Shard& sh : shards) s += local_loss(task, w, sh);
  return s / static_cast<double>(shards.size());
}

double global_mean_loss(const TaskSpec& task, std::span<const double> w,
                        std::span<const Shard> shards) {
  if (shards.empty()) throw std::invalid_argument("global_mean_loss: no shards");
  double s = 0.0;
  for (const Shard& sh : shards) s += mean_local_loss(task, w, sh);
  return s / static_cast<double>(shards.size());
}

double accuracy(const TaskSpec& task, std::span<const double> w, const Shard& test) {
  if (task.kind == TaskKind::Quadratic)
    throw std::invalid_argument("accuracy: requires a classifier task");
  check_dim(task, w);
  if (test.empty()) throw std::invalid_argument("accuracy: empty test set");
  std::size_t correct = 0;
  for (const DataPoint& p : test.points) {
    int best = 0;
    double best_score = class_score(task, w, p.x, 0);
    for (int c = 1; c < task.classes; ++c) {
      const double s = class_score(task, w, p.x, c);
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
    if (best == p.y) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

std::pair<Shard, Shard> make_synthetic_classification(int classes, int n_features, int per_class,
                                                      double spread, std::uint64_t seed) {
  if (classes < 2) throw std::invalid_argument("make_synthetic_classification: classes must be >= 2");
  if (per_class < 1) throw std::invalid_argument("make_synthetic_classification: per_class must be >= 1");
  if (n_features < 1) throw std::invalid_argument("make_synthetic_classification: n_features must be >= 1");

  Rng rng = make_rng(seed, stream::data);
  std::vector<Vec> means(static_cast<std::size_t>(classes));
  for (auto& mu : means) {
    mu.resize(static_cast<std::size_t>(n_features));
    for (double& v : mu) v = normal(rng);
  }

  auto sample_class = [&](int c) {
    DataPoint p;
    p.y = c;
    p.x.resize(static_cast<std::size_t>(n_features));
    for (int f = 0; f < n_features; ++f)
      p.x[static_cast<std::size_t>(f)] =
          means[static_cast<std::size_t>(c)][static_cast<std::size_t>(f)] + spread * normal(rng);
    return p;
  };

  Shard train, test;
  const int test_per_class = std::max(1, per_class / 5);
  for (int c = 0; c < classes; ++c)
    for (int i = 0; i < per_class; ++i) train.points.push_back(sample_class(c));
  for (int c = 0; c < classes; ++c)
    for (int i = 0; i < test_per_class; ++i) test.points.push_back(sample_class(c));
  return {std::move(train), std::move(test)};
}

std::vector<Shard> make_quadratic_shards(int m, int n_features, double scale, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("make_quadratic_shards: m must be >= 1");
  Rng rng = make_rng(seed, stream::data);
  std::vector<Shard> shards(static_cast<std::size_t>(m));
  for (auto& sh : shards) {
    DataPoint center;
    center.x.resize(static_cast<std::size_t>(n_features));
    for (double& v : center.x) v = scale * uniform_double(rng);
    sh.points.push_back(std::move(center));
  }
  return shards;
}

namespace {

std::uint32_t read_be32(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("truncated IDX file: " + path);
  return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

}  // namespace

Shard load_idx_dataset(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("cannot open IDX image file: " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("cannot open IDX label file: " + labels_path);

  const std::uint32_t img_magic = read_be32(img, images_path);
  if (img_magic != 0x00000803u)
    throw std::runtime_error("bad IDX image magic in " + images_path);
  const std::uint32_t n_images = read_be32(img, images_path);
  const std::uint32_t rows = read_be32(img, images_path);
  const std::uint32_t cols = read_be32(img, images_path);

  const std::uint32_t lab_magic = read_be32(lab, labels_path);
  if (lab_magic != 0x00000801u)
    throw std::runtime_error("bad IDX label magic in " + labels_path);
  const std::uint32_t n_labels = read_be32(lab, labels_path);

  if (n_images != n_labels)
    throw std::runtime_error("IDX image/label count mismatch: " + std::to_string(n_images) +
                             " vs " + std::to_string(n_labels));

  const std::size_t pixels = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  Shard out;
  out.points.reserve(n_images);
  std::vector<unsigned char> buf(pixels);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
    if (!img) throw std::runtime_error("truncated IDX file: " + images_path);
    char label = 0;
    lab.read(&label, 1);
    if (!lab) throw std::runtime_error("truncated IDX file: " + labels_path);
    DataPoint p;
    p.y = static_cast<unsigned char>(label);
    p.x.resize(pixels);
    for (std::size_t px = 0; px < pixels; ++px)
      p.x[px] = static_cast<double>(buf[px]) / 255.0;
    out.points.push_back(std::move(p));
  }
  return out;
}

std::vector<Shard> partition_noniid(const Shard& dataset, int m, int labels_per_device,
                                    std::uint64_t seed) {
  if (dataset.empty()) throw std::invalid_argument("partition_noniid: empty dataset");
  if (m < 1) throw std::invalid_argument("partition_noniid: m must be >= 1");
  if (labels_per_device < 1)
    throw std::invalid_argument("partition_noniid: labels_per_device must be >= 1");

  // Label universe = distinct labels present, in sorted order.
  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < dataset.size(); ++i) by_label[dataset.points[i].y].push_back(i);
  std::vector<int> labels;
  for (const auto& [label, _] : by_label) labels.push_back(label);
  const int n_labels = static_cast<int>(labels.size());

  Rng rng = make_rng(seed, stream::partition);
  shuffle(labels, rng);

  // Device d owns labels perm[(d*labels_per_device + t) mod L], deduplicated.
  std::vector<std::vector<int>> owners_of_label(static_cast<std::size_t>(n_labels));
  std::vector<std::vector<char>> owned(static_cast<std::size_t>(m),
                                       std::vector<char>(static_cast<std::size_t>(n_labels), 0));
  for (int d = 0; d < m; ++d) {
    for (int t = 0; t < labels_per_device; ++t) {
      const int li = (d * labels_per_device + t) % n_labels;
      if (!owned[static_cast<std::size_t>(d)][static_cast<std::size_t>(li)]) {
        owned[static_cast<std::size_t>(d)][static_cast<std::size_t>(li)] = 1;
        owners_of_label[static_cast<std::size_t>(li)].push_back(d);
      }
    }
  }

  std::vector<Shard> shards(static_cast<std::size_t>(m));
  for (int li = 0; li < n_labels; ++li) {
    const auto& owners = owners_of_label[static_cast<std::size_t>(li)];
    if (owners.empty()) continue;  // label not dealt (m*labels_per_device < L)
    const auto& idxs = by_label[labels[static_cast<std::size_t>(li)]];
    for (std::size_t p = 0; p < idxs.size(); ++p) {
      const int dev = owners[p % owners.size()];
      shards[static_cast<std::size_t>(dev)].points.push_back(dataset.points[idxs[p]]);
    }
  }

  for (int d = 0; d < m; ++d) {
    if (shards[static_cast<std::size_t>(d)].empty())
      throw std::runtime_error("partition_noniid: device " + std::to_string(d) +
                               " received an empty shard");
  }
  return shards;
}

OracleResult centralized_oracle(const TaskSpec& task, std::span<const Shard> shards,
                                double tolerance, int max_iterations) {
  if (shards.empty()) throw std::invalid_argument("centralized_oracle: no shards");
  if (tolerance <= 0.0) throw std::invalid_argument("centralized_oracle: tolerance must be > 0");

  if (task.kind == TaskKind::Quadratic) {
    // F(w) = (1/m) sum_i [0.5||w - c_i||^2] + (lambda/2)||w||^2,
    // minimized at mean(c) / (1 + lambda).
    Vec wstar(static_cast<std::size_t>(task.dim()), 0.0);
    for (const Shard& sh : shards) {
      if (sh.size() != 1)
        throw std::invalid_argument("centralized_oracle: quadratic shards hold one center each");
      axpy(1.0, sh.points[0].x, wstar);
    }
    scale(wstar, 1.0 / (static_cast<double>(shards.size()) * (1.0 + task.lambda)));
    OracleResult res;
    res.loss = global_loss(task, wstar, shards);
    res.w = std::move(wstar);
    return res;
  }

  // Full-gradient descent with backtracking line search on the global loss.
  const auto objective = [&](const Vec& w) { return global_loss(task, w, shards); };
  const auto gradient = [&](const Vec& w) {
    Vec g(w.size(), 0.0);
    for (const Shard& sh : shards)
      for (const DataPoint& p : sh.points) add_point_gradient(task, w, p, g);
    scale(g, 1.0 / static_cast<double>(shards.size()));
    if (task.lambda > 0.0) axpy(task.lambda, w, g);
    return g;
  };

  Vec w(static_cast<std::size_t>(task.dim()), 0.0);
  double f = objective(w);
  double step = 1.0;
  for (int it = 0; it < max_iterations; ++it) {
    Vec g = gradient(w);
    const double gnorm = norm2(g);
    if (gnorm <= tolerance) {
      OracleResult res;
      res.w = std::move(w);
      res.loss = f;
      res.iterations = it;
      return res;
    }
    // Backtracking Armijo search, growing the trial step mildly after
    // successes; falls back to a small step when no decrease is found
    // (hinge objectives are only piecewise smooth).
    double t = std::min(step * 2.0, 1.0);
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      Vec trial = w;
      axpy(-t, g, trial);
      const double ft = objective(trial);
      if (ft <= f - 0.5 * t * gnorm * gnorm) {
        w = std::move(trial);
        f = ft;
        step = t;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      const double fallback = 1e-3 / std::sqrt(1.0 + it);
      axpy(-fallback, g, w);
      f = objective(w);
      step = fallback;
    }
  }
  throw std::runtime_error("centralized_oracle: no convergence to tolerance " +
                           std::to_string(tolerance) + " within " +
                           std::to_string(max_iterations) + " iterations");
}

GradientBounds estimate_gradient_bounds(const TaskSpec& task, std::span<const Shard> shards,
                                        int sample_count, std::uint64_t seed, double radius,
                                        int batch_size) {
  if (shards.empty()) throw std::invalid_argument("estimate_gradient_bounds: no shards");
  if (sample_count < 1)
    throw std::invalid_argument("estimate_gradient_bounds: sample_count must be >= 1");

  const int m = static_cast<int>(shards.size());
  GradientBounds b;
  b.per_device_l2.assign(static_cast<std::size_t>(m), 0.0);

  Rng rng = make_rng(seed, stream::grad_bound);
  Vec w(static_cast<std::size_t>(task.dim()));
  for (int s = 0; s < sample_count; ++s) {
    const int dev = static_cast<int>(bounded_int(rng, static_cast<std::uint64_t>(m)));
    for (double& v : w) v = radius * (2.0 * uniform_double(rng) - 1.0);
    const Shard& sh = shards[static_cast<std::size_t>(dev)];
    const int bs = std::min<int>(batch_size, static_cast<int>(sh.size()));
    const Vec g = stochastic_gradient(task, w, sh, bs, rng);
    b.per_device_l2[static_cast<std::size_t>(dev)] =
        std::max(b.per_device_l2[static_cast<std::size_t>(dev)], norm2(g));
    b.linf = std::max(b.linf, norm_inf(g));
  }
  for (double& v : b.per_device_l2) v *= 2.0;
  b.linf *= 2.0;
  b.l2_max = *std::max_element(b.per_device_l2.begin(), b.per_device_l2.end());
  return b;
}

void write_shard_csv(std::ostream& out, const Shard& shard) {
  char buf[32];
  for (const DataPoint& p : shard.points) {
    out << p.y;
    for (double v : p.x) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace efhc
