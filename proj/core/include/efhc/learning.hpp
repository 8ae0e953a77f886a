#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "efhc/linalg.hpp"
#include "efhc/rng.hpp"

namespace efhc {

struct DataPoint {
  Vec x;
  int y = 0;
};

/// One device's local dataset slice.
struct Shard {
  std::vector<DataPoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

enum class TaskKind { Quadratic, Hinge, Logistic };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& s);

/// A learning objective. Quadratic tasks model each device's loss as
/// 0.5*||w - c_i||^2 where c_i is the single point stored in its shard; the
/// classifier tasks are linear models with one weight block plus bias per
/// class (one-vs-all hinge, or softmax cross-entropy).
struct TaskSpec {
  TaskKind kind = TaskKind::Hinge;
  int n_features = 64;
  int classes = 10;
  double lambda = 0.0;  // L2 regularization strength

  int dim() const {
    return kind == TaskKind::Quadratic ? n_features : classes * (n_features + 1);
  }
};

/// Loss of one point under parameters w (no regularization term).
double point_loss(const TaskSpec& task, std::span<const double> w, const DataPoint& p);

/// Adds the gradient of point_loss at (w, p) into g.
void add_point_gradient(const TaskSpec& task, std::span<const double> w, const DataPoint& p,
                        Vec& g);

/// Sum of point losses over the shard plus (lambda/2)*||w||^2.
double local_loss(const TaskSpec& task, std::span<const double> w, const Shard& shard);

/// Per-point mean loss plus (lambda/2)*||w||^2. This is the function whose
/// gradient the full-batch stochastic gradient equals.
double mean_local_loss(const TaskSpec& task, std::span<const double> w, const Shard& shard);

/// Average over a uniform without-replacement mini-batch of the point
/// gradients, plus lambda*w. batch_size = |shard| gives the exact full-shard
/// mean gradient regardless of rng state.
Vec stochastic_gradient(const TaskSpec& task, std::span<const double> w, const Shard& shard,
                        int batch_size, Rng& rng);

/// Average of local_loss over all devices.
double global_loss(const TaskSpec& task, std::span<const double> w, std::span<const Shard> shards);

/// Average of mean_local_loss over all devices (the per-point reduction
/// reported in run metrics).
double global_mean_loss(const TaskSpec& task, std::span<const double> w,
                        std::span<const Shard> shards);

/// Top-1 classification accuracy on the given set; ties break toward the
/// lowest class index. Classifier tasks only.
double accuracy(const TaskSpec& task, std::span<const double> w, const Shard& test);

/// Gaussian class clusters with unit-normal means and per-class noise
/// `spread`; returns (train, test) with per_class and max(1, per_class/5)
/// points per class respectively. Deterministic per seed.
std::pair<Shard, Shard> make_synthetic_classification(int classes, int n_features, int per_class,
                                                      double spread, std::uint64_t seed);

/// One single-point shard per device with coordinates scale * U[0,1).
std::vector<Shard> make_quadratic_shards(int m, int n_features, double scale, std::uint64_t seed);

/// Reads an IDX image/label file pair (big-endian magic + dims + raw bytes),
/// scaling pixels to [0,1]. Throws on bad magic, truncation, or a count
/// mismatch between the two files.
Shard load_idx_dataset(const std::string& images_path, const std::string& labels_path);

/// Splits a dataset across m devices so each holds points from exactly
/// labels_per_device label values (assigned round-robin over a seeded label
/// permutation); points of a label are dealt round-robin among its owners.
/// Conserves the dataset exactly. Throws if any device would be empty.
std::vector<Shard> partition_noniid(const Shard& dataset, int m, int labels_per_device,
                                    std::uint64_t seed);

struct OracleResult {
  Vec w;
  double loss = 0.0;
  int iterations = 0;
};

/// Minimizer and minimum of the global loss. Quadratic tasks are solved in
/// closed form; classifier tasks run full-gradient descent with backtracking
/// line search until ||grad||_2 <= tolerance. Throws if the budget runs out
/// before the tolerance is met.
OracleResult centralized_oracle(const TaskSpec& task, std::span<const Shard> shards,
                                double tolerance, int max_iterations = 100000);

/// Empirical gradient bounds from sampled (device, parameter point, batch)
/// triples with parameters drawn in an inf-ball of `radius` around zero.
/// All bounds carry a 2x safety inflation. Extending sample_count extends
/// the same draw stream, so estimates are monotone in sample_count.
struct GradientBounds {
  std::vector<double> per_device_l2;
  double l2_max = 0.0;
  double linf = 0.0;
};

GradientBounds estimate_gradient_bounds(const TaskSpec& task, std::span<const Shard> shards,
                                        int sample_count, std::uint64_t seed,
                                        double radius = 1.0, int batch_size = 32);

void write_shard_csv(std::ostream& out, const Shard& shard);

}  // namespace efhc
