#pragma once

// Multi-positive contrastive loss over a two-layer projection head, and a
// small gradient-descent trainer for the linear_learned encoder.
//
// For anchor z with group mates P (|P| >= 1) and negatives N (every member of
// every other group):
//   zbar = mean(P)
//   d(u, v) = cos(g(u), g(v)),  g(x) = W2 relu(W1 x + b1) + b2
//   L(z) = -log( exp(d(z,zbar)/tau) / (exp(d(z,zbar)/tau) + sum_n exp(d(z,n)/tau)) )
// The batch loss is the mean over anchors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "vpn/error.hpp"
#include "vpn/linalg.hpp"
#include "vpn/media.hpp"

namespace vpn {

inline constexpr double kDefaultTemperature = 0.1;
inline constexpr int kDefaultPositives = 3;

struct ProjectionHead {
  Eigen::MatrixXd w1, w2;
  Eigen::VectorXd b1, b2;

  int dim() const { return static_cast<int>(w1.cols()); }

  static ProjectionHead zeros(int d) {
    return {Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Zero(d, d), Eigen::VectorXd::Zero(d),
            Eigen::VectorXd::Zero(d)};
  }

  static ProjectionHead identity(int d) {
    auto h = zeros(d);
    h.w1.setIdentity();
    h.w2.setIdentity();
    return h;
  }

  /// He-style Gaussian weights, small positive first-layer bias so fewer
  /// units start dead.
  static ProjectionHead random(int d, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / d));
    auto h = zeros(d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) h.w1(i, j) = gauss(rng);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) h.w2(i, j) = gauss(rng);
    h.b1.setConstant(0.01);
    return h;
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    return w2 * (w1 * x + b1).cwiseMax(0.0) + b2;
  }

  void axpy(double a, const ProjectionHead& g) {
    w1 += a * g.w1;
    w2 += a * g.w2;
    b1 += a * g.b1;
    b2 += a * g.b2;
  }
};

struct ContrastiveBatch {
  Eigen::MatrixXd embeddings;  ///< B x D, one embedding per row
  std::vector<int> group_ids;
  double temperature = kDefaultTemperature;
  ProjectionHead head;
};

struct LossResult {
  double loss = 0;
  ProjectionHead grad_head;
  Eigen::MatrixXd grad_embeddings;
};

namespace detail {

struct HeadTrace {
  Eigen::VectorXd x, pre, out;
};

inline HeadTrace head_forward(const ProjectionHead& h, const Eigen::VectorXd& x) {
  HeadTrace t;
  t.x = x;
  t.pre = h.w1 * x + h.b1;
  t.out = h.w2 * t.pre.cwiseMax(0.0) + h.b2;
  return t;
}

// Accumulates parameter gradients and returns d loss / d input.
inline Eigen::VectorXd head_backward(const ProjectionHead& h, const HeadTrace& t, const Eigen::VectorXd& dout,
                                     ProjectionHead& grad) {
  const Eigen::VectorXd act = t.pre.cwiseMax(0.0);
  grad.w2 += dout * act.transpose();
  grad.b2 += dout;
  Eigen::VectorXd dpre = h.w2.transpose() * dout;
  for (Eigen::Index i = 0; i < dpre.size(); ++i)
    if (t.pre[i] <= 0) dpre[i] = 0;
  grad.w1 += dpre * t.x.transpose();
  grad.b1 += dpre;
  return h.w1.transpose() * dpre;
}

struct CosGrad {
  double value;
  Eigen::VectorXd du, dv;
};

inline CosGrad cos_with_grad(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const double nu = u.norm(), nv = v.norm();
  require(nu > 0 && nv > 0, ErrorCode::data, "projection head produced a zero vector");
  const double c = u.dot(v) / (nu * nv);
  return {c, v / (nu * nv) - c * u / (nu * nu), u / (nu * nv) - c * v / (nv * nv)};
}

inline std::map<int, std::vector<int>> group_members(const std::vector<int>& ids) {
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < static_cast<int>(ids.size()); ++i) groups[ids[i]].push_back(i);
  return groups;
}

}  // namespace detail

inline LossResult contrastive_loss(const ContrastiveBatch& batch) {
  const auto b = static_cast<int>(batch.embeddings.rows());
  const auto d = static_cast<int>(batch.embeddings.cols());
  require(std::isfinite(batch.temperature) && batch.temperature > 0, ErrorCode::parameter,
          "temperature must be positive");
  require(static_cast<int>(batch.group_ids.size()) == b, ErrorCode::shape, "one group id per embedding");
  require(b > 0, ErrorCode::degenerate_group, "empty batch");
  require(batch.head.w1.rows() == d && batch.head.w1.cols() == d && batch.head.w2.rows() == d &&
              batch.head.w2.cols() == d && batch.head.b1.size() == d && batch.head.b2.size() == d,
          ErrorCode::shape, "projection head must be D x D");
  const auto groups = detail::group_members(batch.group_ids);
  for (const auto& [id, members] : groups)
    require(members.size() >= 2, ErrorCode::degenerate_group,
            "group " + std::to_string(id) + " has no positive");

  const double tau = batch.temperature;
  const auto& head = batch.head;
  std::vector<detail::HeadTrace> traces(static_cast<std::size_t>(b)), mean_traces(static_cast<std::size_t>(b));
  for (int i = 0; i < b; ++i) traces[i] = detail::head_forward(head, batch.embeddings.row(i).transpose());

  std::vector<Eigen::VectorXd> dh(static_cast<std::size_t>(b), Eigen::VectorXd::Zero(d));
  std::vector<Eigen::VectorXd> dhbar(static_cast<std::size_t>(b), Eigen::VectorXd::Zero(d));
  double total = 0;
  std::vector<int> negatives;
  std::vector<double> logits;
  for (int i = 0; i < b; ++i) {
    const auto& members = groups.at(batch.group_ids[i]);
    Eigen::VectorXd zbar = Eigen::VectorXd::Zero(d);
    for (int j : members)
      if (j != i) zbar += batch.embeddings.row(j).transpose();
    zbar /= static_cast<double>(members.size() - 1);
    mean_traces[i] = detail::head_forward(head, zbar);

    negatives.clear();
    for (int j = 0; j < b; ++j)
      if (batch.group_ids[j] != batch.group_ids[i]) negatives.push_back(j);

    const auto pos = detail::cos_with_grad(traces[i].out, mean_traces[i].out);
    std::vector<detail::CosGrad> neg;
    neg.reserve(negatives.size());
    logits.assign(1, pos.value / tau);
    for (int j : negatives) {
      neg.push_back(detail::cos_with_grad(traces[i].out, traces[j].out));
      logits.push_back(neg.back().value / tau);
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0;
    for (double l : logits) z += std::exp(l - m);
    const double lse = m + std::log(z);
    total += lse - logits[0];

    // d L_i / d logit_k = softmax_k - [k == 0], scaled by 1/B for the mean.
    const double g0 = (std::exp(logits[0] - lse) - 1.0) / (b * tau);
    dh[i] += g0 * pos.du;
    dhbar[i] += g0 * pos.dv;
    for (std::size_t k = 0; k < negatives.size(); ++k) {
      const double gk = std::exp(logits[k + 1] - lse) / (b * tau);
      dh[i] += gk * neg[k].du;
      dh[negatives[k]] += gk * neg[k].dv;
    }
  }

  LossResult res;
  res.loss = total / b;
  res.grad_head = ProjectionHead::zeros(d);
  res.grad_embeddings = Eigen::MatrixXd::Zero(b, d);
  for (int i = 0; i < b; ++i) {
    res.grad_embeddings.row(i) += detail::head_backward(head, traces[i], dh[i], res.grad_head).transpose();
    const Eigen::VectorXd dzbar = detail::head_backward(head, mean_traces[i], dhbar[i], res.grad_head);
    const auto& members = groups.at(batch.group_ids[i]);
    const double share = 1.0 / static_cast<double>(members.size() - 1);
    for (int j : members)
      if (j != i) res.grad_embeddings.row(j) += share * dzbar.transpose();
  }
  return res;
}

// ---------------------------------------------------------------------------
// Trainer

/// Base-encoder descriptors grouped by source: rows sharing a group id are
/// augmentations of the same frame or audio window.
struct TrainingGroups {
  int input_dim = 0;
  std::vector<std::vector<float>> vectors;
  std::vector<int> group_ids;
};

struct TrainOptions {
  int out_dim = 256;
  int epochs = 20;
  double learning_rate = 0.5;
  std::uint64_t seed = 1;
  int groups_per_batch = 8;
  double temperature = kDefaultTemperature;
};

struct TrainResult {
  RowMatrixF weights;        ///< out_dim x input_dim
  RowMatrixF initial_weights;
  ProjectionHead head;
  std::vector<double> epoch_loss;
};

/// Initial encoder weights: identity when square, seeded orthonormal rows otherwise.
inline Eigen::MatrixXd initial_encoder_weights(int out_dim, int in_dim, std::uint64_t seed) {
  if (out_dim == in_dim) return Eigen::MatrixXd::Identity(out_dim, in_dim);
  return *random_orthonormal(mix_seed(seed, 0x1417), out_dim, in_dim);
}

inline Eigen::VectorXd embed_linear(const Eigen::MatrixXd& w, std::span<const float> x) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v[static_cast<Eigen::Index>(i)] = x[i];
  Eigen::VectorXd z = w * v;
  const double n = z.norm();
  return n > 0 ? Eigen::VectorXd(z / n) : z;
}

inline TrainResult train_linear_encoder(const TrainingGroups& data, const TrainOptions& opt) {
  require(opt.epochs >= 1 && opt.groups_per_batch >= 2 && opt.out_dim > 0, ErrorCode::parameter,
          "bad training options");
  require(data.input_dim > 0 && data.vectors.size() == data.group_ids.size(), ErrorCode::data,
          "training vectors and group ids disagree");
  for (const auto& v : data.vectors)
    require(static_cast<int>(v.size()) == data.input_dim, ErrorCode::shape, "training vector dimension");
  const auto groups = detail::group_members(data.group_ids);
  require(groups.size() >= 8, ErrorCode::data, "need at least 8 augmentation groups");
  for (const auto& [id, members] : groups)
    require(members.size() >= 2, ErrorCode::data, "every group needs at least two members");

  std::vector<int> order;
  for (const auto& [id, members] : groups) order.push_back(id);

  Rng rng(mix_seed(opt.seed, 0x7EA1));
  Eigen::MatrixXd w = initial_encoder_weights(opt.out_dim, data.input_dim, opt.seed);
  TrainResult res;
  res.initial_weights = w.cast<float>();
  ProjectionHead head = ProjectionHead::random(opt.out_dim, mix_seed(opt.seed, 0x4EAD));

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_total = 0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opt.groups_per_batch)) {
      std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(opt.groups_per_batch));
      if (order.size() - end < 2) end = order.size();  // fold a lone trailing group into this batch
      std::vector<int> rows;
      for (std::size_t g = start; g < end; ++g)
        for (int r : groups.at(order[g])) rows.push_back(r);

      ContrastiveBatch batch;
      batch.temperature = opt.temperature;
      batch.head = head;
      batch.embeddings.resize(static_cast<Eigen::Index>(rows.size()), opt.out_dim);
      std::vector<Eigen::VectorXd> pre(rows.size());
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& x = data.vectors[static_cast<std::size_t>(rows[k])];
        Eigen::VectorXd xv(data.input_dim);
        for (int i = 0; i < data.input_dim; ++i) xv[i] = x[static_cast<std::size_t>(i)];
        pre[k] = w * xv;
        const double n = pre[k].norm();
        batch.embeddings.row(static_cast<Eigen::Index>(k)) = (n > 0 ? Eigen::VectorXd(pre[k] / n) : pre[k]).transpose();
        batch.group_ids.push_back(data.group_ids[static_cast<std::size_t>(rows[k])]);
      }
      const auto lr = contrastive_loss(batch);
      epoch_total += lr.loss;
      ++batches;

      // Back through z = u / |u|, u = W x.
      Eigen::MatrixXd grad_w = Eigen::MatrixXd::Zero(w.rows(), w.cols());
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const double n = pre[k].norm();
        if (n <= 0) continue;
        const Eigen::VectorXd z = pre[k] / n;
        const Eigen::VectorXd dz = lr.grad_embeddings.row(static_cast<Eigen::Index>(k)).transpose();
        const Eigen::VectorXd du = (dz - z * z.dot(dz)) / n;
        const auto& x = data.vectors[static_cast<std::size_t>(rows[k])];
        for (int i = 0; i < data.input_dim; ++i) grad_w.col(i) += du * x[static_cast<std::size_t>(i)];
      }
      w -= opt.learning_rate * grad_w;
      head.axpy(-opt.learning_rate, lr.grad_head);
      if (end == order.size()) break;
    }
    res.epoch_loss.push_back(epoch_total / batches);
  }
  res.weights = w.cast<float>();
  res.head = std::move(head);
  return res;
}

}  // namespace vpn
