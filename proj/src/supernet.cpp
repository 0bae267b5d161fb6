#include "zobilevel/supernet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace zobilevel {

std::string_view to_string(EdgeOp op) {
  switch (op) {
    case EdgeOp::Zero: return "zero";
    case EdgeOp::Identity: return "identity";
    case EdgeOp::Linear: return "linear";
    case EdgeOp::TanhLinear: return "tanh_linear";
  }
  return "?";
}

SyntheticDataset SyntheticDataset::generate(std::uint64_t seed, int n_train, int n_val) {
  // cluster k = i % 4; class = k / 2
  static constexpr double kCenters[4][2] = {{1.0, 1.0}, {-1.0, -1.0}, {1.0, -1.0}, {-1.0, 1.0}};
  constexpr double kStd = 0.45;
  Rng rng = Rng::split(seed, streams::kProblemConstruction);
  const int total = n_train + n_val;
  MatrixXd x(2, total);
  std::vector<int> y(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) {
    const int k = i % 4;
    x(0, i) = kCenters[k][0] + kStd * rng.normal();
    x(1, i) = kCenters[k][1] + kStd * rng.normal();
    y[static_cast<std::size_t>(i)] = k / 2;
  }
  SyntheticDataset d;
  d.train.x = x.leftCols(n_train);
  d.val.x = x.rightCols(n_val);
  d.train.y.assign(y.begin(), y.begin() + n_train);
  d.val.y.assign(y.begin() + n_train, y.end());
  d.train_ids.resize(static_cast<std::size_t>(n_train));
  d.val_ids.resize(static_cast<std::size_t>(n_val));
  std::iota(d.train_ids.begin(), d.train_ids.end(), 0);
  std::iota(d.val_ids.begin(), d.val_ids.end(), n_train);
  return d;
}

struct ToySupernet::Layout {
  Index stem_w, stem_b, edges, cls_w, cls_b, total;
  Index edge_block;  // two H x H matrices per edge
};

ToySupernet::ToySupernet(const SupernetConfig& cfg)
    : ToySupernet(cfg, SyntheticDataset::generate(cfg.data_seed)) {}

ToySupernet::ToySupernet(const SupernetConfig& cfg, SyntheticDataset data)
    : nodes_(cfg.nodes),
      width_(cfg.width),
      batch_size_(cfg.batch),
      data_seed_(cfg.data_seed),
      data_(std::move(data)) {
  if (nodes_ < 2) throw Error("supernet: nodes must be >= 2");
  if (width_ < 1) throw Error("supernet: width must be >= 1");
  if (batch_size_ < 0) throw Error("supernet: batch must be >= 0");
  shuffle_.resize(static_cast<std::size_t>(data_.train.size()));
  std::iota(shuffle_.begin(), shuffle_.end(), 0);
  Rng rng = Rng::split(data_seed_, streams::kMinibatchShuffle);
  std::shuffle(shuffle_.begin(), shuffle_.end(), rng.engine());
}

ToySupernet::Layout ToySupernet::layout() const {
  const Index H = width_;
  Layout l{};
  l.stem_w = 0;
  l.stem_b = H * 2;
  l.edges = l.stem_b + H;
  l.edge_block = 2 * H * H;
  l.cls_w = l.edges + static_cast<Index>(edges()) * l.edge_block;
  l.cls_b = l.cls_w + classes() * static_cast<Index>(nodes_) * H;
  l.total = l.cls_b + classes();
  return l;
}

Index ToySupernet::omega_dim() const { return layout().total; }

void ToySupernet::check_shapes(const VectorXd& omega, const VectorXd& alpha) const {
  if (omega.size() != omega_dim())
    throw Error("supernet: omega has size " + std::to_string(omega.size()) + ", expected " +
                std::to_string(omega_dim()));
  if (alpha.size() != alpha_dim())
    throw Error("supernet: alpha has size " + std::to_string(alpha.size()) + ", expected " +
                std::to_string(alpha_dim()));
}

namespace {

using ConstMap = Eigen::Map<const MatrixXd>;
using MutMap = Eigen::Map<MatrixXd>;

MatrixXd edge_softmax(const VectorXd& alpha, int edges) {
  MatrixXd w(edges, kOpsPerEdge);
  for (int e = 0; e < edges; ++e) {
    const auto a = alpha.segment(static_cast<Index>(e) * kOpsPerEdge, kOpsPerEdge);
    const double mx = a.maxCoeff();
    // scalar exp: the packet version leaves denormals where 0 is exact
    double sum = 0.0;
    for (int o = 0; o < kOpsPerEdge; ++o) sum += w(e, o) = std::exp(a[o] - mx);
    w.row(e) /= sum;
  }
  return w;
}

void check_batch(const Batch& batch) {
  if (batch.x.rows() != 2) throw Error("supernet: batch inputs must have 2 rows");
  if (static_cast<Index>(batch.y.size()) != batch.x.cols())
    throw Error("supernet: batch labels do not match inputs");
  for (int label : batch.y)
    if (label < 0 || label > 1) throw Error("supernet: label out of range");
}

}  // namespace

SupernetForward ToySupernet::forward(const VectorXd& omega, const VectorXd& alpha,
                                     const Batch& batch) const {
  SupernetForward out;
  out.loss = evaluate(omega, alpha, batch, false).loss;
  out.mixture_weights = edge_softmax(alpha, edges());
  return out;
}

SupernetGradients ToySupernet::backward(const VectorXd& omega, const VectorXd& alpha,
                                        const Batch& batch) const {
  return evaluate(omega, alpha, batch, true);
}

SupernetGradients ToySupernet::evaluate(const VectorXd& omega, const VectorXd& alpha,
                                        const Batch& batch, bool with_gradients) const {
  check_shapes(omega, alpha);
  check_batch(batch);
  const Layout L = layout();
  const Index H = width_;
  const Index B = batch.size();
  const int K = nodes_;
  const MatrixXd w = edge_softmax(alpha, edges());

  const ConstMap Ws(omega.data() + L.stem_w, H, 2);
  const auto bs = omega.segment(L.stem_b, H);
  auto edge_W = [&](int e) {
    return ConstMap(omega.data() + L.edges + e * L.edge_block, H, H);
  };
  auto edge_V = [&](int e) {
    return ConstMap(omega.data() + L.edges + e * L.edge_block + H * H, H, H);
  };
  const ConstMap Wc(omega.data() + L.cls_w, classes(), K * H);
  const auto bc = omega.segment(L.cls_b, classes());

  // forward, caching per-edge intermediate activations
  std::vector<MatrixXd> h(static_cast<std::size_t>(K + 1));
  std::vector<MatrixXd> lin(static_cast<std::size_t>(edges()));
  std::vector<MatrixXd> th(static_cast<std::size_t>(edges()));
  h[0] = (Ws * batch.x).colwise() + bs;
  for (int j = 1; j <= K; ++j) {
    MatrixXd acc = MatrixXd::Zero(H, B);
    for (int i = 0; i < j; ++i) {
      const int e = edge_index(i, j);
      const auto& hi = h[static_cast<std::size_t>(i)];
      lin[static_cast<std::size_t>(e)] = edge_W(e) * hi;
      th[static_cast<std::size_t>(e)] = (edge_V(e) * hi).array().tanh().matrix();
      acc += w(e, 1) * hi + w(e, 2) * lin[static_cast<std::size_t>(e)] +
             w(e, 3) * th[static_cast<std::size_t>(e)];
    }
    h[static_cast<std::size_t>(j)] = acc / static_cast<double>(j);
  }
  MatrixXd features(K * H, B);
  for (int j = 1; j <= K; ++j) features.middleRows((j - 1) * H, H) = h[static_cast<std::size_t>(j)];
  MatrixXd logits = (Wc * features).colwise() + bc;

  SupernetGradients out;
  MatrixXd delta(classes(), B);
  double loss = 0.0;
  for (Index n = 0; n < B; ++n) {
    const double mx = logits.col(n).maxCoeff();
    const Eigen::ArrayXd ex = (logits.col(n).array() - mx).exp();
    const double s = ex.sum();
    const int y = batch.y[static_cast<std::size_t>(n)];
    loss += -(logits(y, n) - mx - std::log(s));
    delta.col(n) = (ex / s).matrix();
    delta(y, n) -= 1.0;
  }
  out.loss = loss;
  if (!with_gradients) return out;

  out.grad_omega = VectorXd::Zero(omega.size());
  MutMap dWc(out.grad_omega.data() + L.cls_w, classes(), K * H);
  dWc = delta * features.transpose();
  out.grad_omega.segment(L.cls_b, classes()) = delta.rowwise().sum();

  const MatrixXd dfeat = Wc.transpose() * delta;
  std::vector<MatrixXd> G(static_cast<std::size_t>(K + 1), MatrixXd::Zero(H, B));
  for (int j = 1; j <= K; ++j) G[static_cast<std::size_t>(j)] = dfeat.middleRows((j - 1) * H, H);

  MatrixXd dw = MatrixXd::Zero(edges(), kOpsPerEdge);
  for (int j = K; j >= 1; --j) {
    const MatrixXd Gj = G[static_cast<std::size_t>(j)] / static_cast<double>(j);
    for (int i = 0; i < j; ++i) {
      const int e = edge_index(i, j);
      const auto& hi = h[static_cast<std::size_t>(i)];
      const auto& le = lin[static_cast<std::size_t>(e)];
      const auto& te = th[static_cast<std::size_t>(e)];
      dw(e, 1) = (Gj.array() * hi.array()).sum();
      dw(e, 2) = (Gj.array() * le.array()).sum();
      dw(e, 3) = (Gj.array() * te.array()).sum();

      const MatrixXd dpre = ((w(e, 3) * Gj).array() * (1.0 - te.array().square())).matrix();
      MutMap dW(out.grad_omega.data() + L.edges + e * L.edge_block, H, H);
      MutMap dV(out.grad_omega.data() + L.edges + e * L.edge_block + H * H, H, H);
      dW = w(e, 2) * Gj * hi.transpose();
      dV = dpre * hi.transpose();
      G[static_cast<std::size_t>(i)] +=
          w(e, 1) * Gj + w(e, 2) * (edge_W(e).transpose() * Gj) + edge_V(e).transpose() * dpre;
    }
  }
  MutMap dWs(out.grad_omega.data() + L.stem_w, H, 2);
  dWs = G[0] * batch.x.transpose();
  out.grad_omega.segment(L.stem_b, H) = G[0].rowwise().sum();

  // softmax Jacobian per edge
  out.grad_alpha.resize(alpha_dim());
  for (int e = 0; e < edges(); ++e) {
    const double inner = w.row(e).dot(dw.row(e));
    for (int o = 0; o < kOpsPerEdge; ++o)
      out.grad_alpha[static_cast<Index>(e) * kOpsPerEdge + o] = w(e, o) * (dw(e, o) - inner);
  }
  return out;
}

double ToySupernet::train_loss(const VectorXd& omega, const VectorXd& alpha) const {
  return evaluate(omega, alpha, data_.train, false).loss;
}

double ToySupernet::val_loss(const VectorXd& omega, const VectorXd& alpha) const {
  return evaluate(omega, alpha, data_.val, false).loss;
}

VectorXd ToySupernet::grad_omega_train(const VectorXd& omega, const VectorXd& alpha) const {
  return backward(omega, alpha, data_.train).grad_omega;
}

VectorXd ToySupernet::grad_omega_val(const VectorXd& omega, const VectorXd& alpha) const {
  return backward(omega, alpha, data_.val).grad_omega;
}

VectorXd ToySupernet::grad_alpha_val(const VectorXd& omega, const VectorXd& alpha) const {
  return backward(omega, alpha, data_.val).grad_alpha;
}

VectorXd ToySupernet::grad_alpha_train(const VectorXd& omega, const VectorXd& alpha) const {
  return backward(omega, alpha, data_.train).grad_alpha;
}

Batch ToySupernet::minibatch(long step) const {
  const Index n = data_.train.size();
  if (batch_size_ == 0 || batch_size_ >= n) return data_.train;
  const Index per_epoch = n / batch_size_;
  const Index start = (step % per_epoch) * batch_size_;
  Batch b;
  b.x.resize(2, batch_size_);
  b.y.resize(static_cast<std::size_t>(batch_size_));
  for (Index k = 0; k < batch_size_; ++k) {
    const int id = shuffle_[static_cast<std::size_t>(start + k)];
    b.x.col(k) = data_.train.x.col(id);
    b.y[static_cast<std::size_t>(k)] = data_.train.y[static_cast<std::size_t>(id)];
  }
  return b;
}

VectorXd ToySupernet::inner_gradient(const InnerState& state, const VectorXd& alpha) const {
  if (batch_size_ == 0) return grad_omega_train(state.omega, alpha);
  return backward(state.omega, alpha, minibatch(state.step_count)).grad_omega;
}

InnerState ToySupernet::initial_state() const {
  const Layout L = layout();
  const Index H = width_;
  Rng rng = Rng::split(data_seed_, streams::kProblemInit);
  VectorXd w = VectorXd::Zero(L.total);
  auto fill = [&](Index offset, Index count, double scale) {
    for (Index k = 0; k < count; ++k) w[offset + k] = scale * rng.normal();
  };
  fill(L.stem_w, H * 2, std::sqrt(1.0 / 2.0));
  for (int e = 0; e < edges(); ++e) fill(L.edges + e * L.edge_block, L.edge_block, std::sqrt(1.0 / H));
  fill(L.cls_w, classes() * nodes_ * H, std::sqrt(1.0 / (nodes_ * H)));
  return InnerState(std::move(w));
}

std::vector<EdgeOp> ToySupernet::chosen_ops(const VectorXd& alpha) const {
  if (alpha.size() != alpha_dim()) throw Error("supernet: alpha has the wrong size");
  std::vector<EdgeOp> ops(static_cast<std::size_t>(edges()));
  for (int e = 0; e < edges(); ++e) {
    Index best = 0;
    alpha.segment(static_cast<Index>(e) * kOpsPerEdge, kOpsPerEdge).maxCoeff(&best);
    ops[static_cast<std::size_t>(e)] = static_cast<EdgeOp>(best);
  }
  return ops;
}

VectorXd ToySupernet::discretize(const VectorXd& alpha) const {
  const auto ops = chosen_ops(alpha);
  VectorXd out = VectorXd::Constant(alpha_dim(), -1e3);
  for (int e = 0; e < edges(); ++e)
    out[static_cast<Index>(e) * kOpsPerEdge + static_cast<int>(ops[static_cast<std::size_t>(e)])] = 0.0;
  return out;
}

VectorXd ToySupernet::random_architecture(Rng& rng) const {
  VectorXd a(alpha_dim());
  for (Index i = 0; i < a.size(); ++i) a[i] = rng.normal();
  return discretize(a);
}

}  // namespace zobilevel
