#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "zobilevel/config.hpp"
#include "zobilevel/problem.hpp"
#include "zobilevel/rng.hpp"

namespace zobilevel {

/// Candidate operations on every supernet edge.
enum class EdgeOp : int { Zero = 0, Identity = 1, Linear = 2, TanhLinear = 3 };
inline constexpr int kOpsPerEdge = 4;
std::string_view to_string(EdgeOp op);

/// A labelled batch: one column of `x` per sample.
struct Batch {
  MatrixXd x;  // 2 x B
  std::vector<int> y;

  Index size() const { return x.cols(); }
};

/// Two classes, two Gaussian clusters per class (XOR layout) in the plane.
struct SyntheticDataset {
  Batch train;
  Batch val;
  /// Index of every sample in the generated pool; train and val are disjoint.
  std::vector<int> train_ids;
  std::vector<int> val_ids;

  static SyntheticDataset generate(std::uint64_t seed, int n_train = 256, int n_val = 256);
};

struct SupernetForward {
  double loss = 0.0;
  /// softmax(alpha) per edge, one row per edge.
  MatrixXd mixture_weights;
};

struct SupernetGradients {
  double loss = 0.0;
  VectorXd grad_omega;
  VectorXd grad_alpha;
};

/// DARTS-style cell on 2-D inputs:
///
///   h_0 = W_stem x + b_stem
///   h_j = 1/j sum_{i<j} sum_o softmax(alpha_{ij})_o op_o(h_i),   j = 1..nodes
///   logits = W_cls [h_1; ...; h_nodes] + b_cls
///
/// Nodes average their incoming edges so activations stay O(1) for every
/// discrete architecture. Loss is softmax cross-entropy summed (not
/// averaged) over the batch.
class ToySupernet final : public BilevelProblem {
 public:
  ToySupernet(const SupernetConfig& cfg);
  ToySupernet(const SupernetConfig& cfg, SyntheticDataset data);

  int nodes() const { return nodes_; }
  int width() const { return width_; }
  int edges() const { return nodes_ * (nodes_ + 1) / 2; }
  int classes() const { return 2; }
  const SyntheticDataset& data() const { return data_; }

  /// Row-major edge order: (0,1), (0,2), (1,2), (0,3), ...
  int edge_index(int from, int to) const { return to * (to - 1) / 2 + from; }

  SupernetForward forward(const VectorXd& omega, const VectorXd& alpha, const Batch& batch) const;
  SupernetGradients backward(const VectorXd& omega, const VectorXd& alpha,
                             const Batch& batch) const;

  Index alpha_dim() const override { return static_cast<Index>(edges()) * kOpsPerEdge; }
  Index omega_dim() const override;

  double train_loss(const VectorXd& omega, const VectorXd& alpha) const override;
  double val_loss(const VectorXd& omega, const VectorXd& alpha) const override;
  VectorXd grad_omega_train(const VectorXd& omega, const VectorXd& alpha) const override;
  VectorXd grad_omega_val(const VectorXd& omega, const VectorXd& alpha) const override;
  VectorXd grad_alpha_val(const VectorXd& omega, const VectorXd& alpha) const override;
  VectorXd grad_alpha_train(const VectorXd& omega, const VectorXd& alpha) const override;
  VectorXd inner_gradient(const InnerState& state, const VectorXd& alpha) const override;

  InnerState initial_state() const override;
  VectorXd initial_alpha() const override { return VectorXd::Zero(alpha_dim()); }

  /// Batch used by the inner solver at a given step (whole train split when
  /// minibatching is off).
  Batch minibatch(long step) const;

  /// One-hot architecture: the argmax op of every edge gets 0, the rest -1e3,
  /// so softmax yields exact 0/1 weights.
  VectorXd discretize(const VectorXd& alpha) const;
  VectorXd random_architecture(Rng& rng) const;
  std::vector<EdgeOp> chosen_ops(const VectorXd& alpha) const;

 private:
  struct Layout;
  Layout layout() const;
  void check_shapes(const VectorXd& omega, const VectorXd& alpha) const;
  SupernetGradients evaluate(const VectorXd& omega, const VectorXd& alpha, const Batch& batch,
                             bool with_gradients) const;

  int nodes_;
  int width_;
  int batch_size_;
  std::uint64_t data_seed_;
  SyntheticDataset data_;
  std::vector<int> shuffle_;
};

}  // namespace zobilevel
