#pragma once

// Reference implementations used as test oracles. Each is written directly
// from its definition and shares no code with the library under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vpn/chunk.hpp"
#include "vpn/contrastive.hpp"

namespace vpn::oracle {

/// Edit distance by the plain recursive definition with memoisation.
inline std::size_t levenshtein(const std::vector<Codeword>& a, const std::vector<Codeword>& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> lev = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == 0) return j;
    if (j == 0) return i;
    const auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const std::size_t r = std::min({lev(i - 1, j) + 1, lev(i, j - 1) + 1,
                                    lev(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1)});
    memo[key] = r;
    return r;
  };
  return lev(a.size(), b.size());
}

struct ToyChunk {
  std::string video;
  std::vector<Codeword> codewords;
};

/// Relevance of every video by scanning the chunk list directly.
inline std::map<std::string, double> tfidf_scores(const std::vector<ToyChunk>& chunks,
                                                  const std::vector<std::vector<Codeword>>& query) {
  const double n = static_cast<double>(chunks.size());
  std::map<Codeword, double> df;
  for (const auto& c : chunks) {
    std::vector<Codeword> uniq = c.codewords;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (auto w : uniq) df[w] += 1;
  }
  auto idf = [&](Codeword w) { return std::log((1.0 + n) / (1.0 + df[w])) + 1.0; };
  std::map<std::string, double> score;
  for (const auto& c : chunks) {
    double s = score[c.video];
    for (const auto& q : query)
      for (auto w : q) s += static_cast<double>(std::count(c.codewords.begin(), c.codewords.end(), w)) * idf(w);
    score[c.video] = s;
  }
  return score;
}

/// Ranking by score descending, video id ascending. Scores within `rel_tol`
/// of each other count as tied.
inline std::vector<std::pair<std::string, double>> ranking(const std::map<std::string, double>& scores,
                                                           double rel_tol = 1e-9) {
  std::vector<std::pair<std::string, double>> r(scores.begin(), scores.end());
  std::stable_sort(r.begin(), r.end(), [&](const auto& a, const auto& b) {
    return a.second > b.second + rel_tol * std::max({1.0, std::abs(a.second), std::abs(b.second)});
  });
  return r;
}

/// Contrastive loss computed straight from its formula, forward only, in
/// long double so that finite differences are not swamped by rounding.
inline long double contrastive_loss(const Eigen::MatrixXd& z_in, const std::vector<int>& groups, double tau_in,
                               const ProjectionHead& h) {
  using Real = long double;
  using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
  const Mat z = z_in.cast<Real>(), w1 = h.w1.cast<Real>(), w2 = h.w2.cast<Real>();
  const Vec b1 = h.b1.cast<Real>(), b2 = h.b2.cast<Real>();
  const Real tau = tau_in;
  auto g = [&](const Vec& x) {
    Vec a = w1 * x + b1;
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = std::max(Real(0), a[i]);
    return Vec(w2 * a + b2);
  };
  auto cos = [](const Vec& u, const Vec& v) { return u.dot(v) / (u.norm() * v.norm()); };
  const auto b = z.rows();
  Real total = 0;
  for (Eigen::Index i = 0; i < b; ++i) {
    Vec mean = Vec::Zero(z.cols());
    int mates = 0;
    for (Eigen::Index j = 0; j < b; ++j)
      if (j != i && groups[j] == groups[i]) mean += z.row(j).transpose(), ++mates;
    mean /= Real(mates);
    const Vec gi = g(z.row(i).transpose());
    const Real pos = std::exp(cos(gi, g(mean)) / tau);
    Real denom = pos;
    for (Eigen::Index j = 0; j < b; ++j)
      if (groups[j] != groups[i]) denom += std::exp(cos(gi, g(z.row(j).transpose())) / tau);
    total += -std::log(pos / denom);
  }
  return total / Real(b);
}

/// Relative error with a floor so that entries near zero are judged absolutely.
inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({1e-6, std::abs(analytic), std::abs(numeric)});
}

struct GradCheck {
  double max_rel_error = 0;
  std::size_t checked = 0;
};

/// Central finite differences of the oracle loss against the library's
/// analytic gradients, over embeddings and every head parameter.
inline GradCheck check_gradients(const ContrastiveBatch& batch, double h = 1e-6) {
  const auto res = vpn::contrastive_loss(batch);
  GradCheck gc;
  auto visit = [&](double& param, double analytic, auto loss_of) {
    const double saved = param, hi = saved + h, lo = saved - h;
    param = hi;
    const long double up = loss_of();
    param = lo;
    const long double down = loss_of();
    param = saved;
    gc.max_rel_error = std::max(gc.max_rel_error, relative_error(analytic, static_cast<double>((up - down) / (hi - lo))));
    ++gc.checked;
  };
  Eigen::MatrixXd z = batch.embeddings;
  ProjectionHead head = batch.head;
  auto loss = [&] { return contrastive_loss(z, batch.group_ids, batch.temperature, head); };
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j) visit(z(i, j), res.grad_embeddings(i, j), loss);
  for (Eigen::Index i = 0; i < head.w1.size(); ++i) visit(head.w1.data()[i], res.grad_head.w1.data()[i], loss);
  for (Eigen::Index i = 0; i < head.w2.size(); ++i) visit(head.w2.data()[i], res.grad_head.w2.data()[i], loss);
  for (Eigen::Index i = 0; i < head.b1.size(); ++i) visit(head.b1[i], res.grad_head.b1[i], loss);
  for (Eigen::Index i = 0; i < head.b2.size(); ++i) visit(head.b2[i], res.grad_head.b2[i], loss);
  return gc;
}

/// Random batch of unit vectors in `groups` groups of `per_group` members.
inline ContrastiveBatch random_batch(std::uint64_t seed, int groups, int per_group, int dim, double tau = 0.1) {
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ContrastiveBatch b;
  b.temperature = tau;
  b.embeddings.resize(groups * per_group, dim);
  for (int g = 0; g < groups; ++g) {
    Eigen::VectorXd centre(dim);
    for (int d = 0; d < dim; ++d) centre[d] = gauss(rng);
    for (int m = 0; m < per_group; ++m) {
      Eigen::VectorXd v(dim);
      for (int d = 0; d < dim; ++d) v[d] = centre[d] + 0.5 * gauss(rng);
      b.embeddings.row(g * per_group + m) = v.normalized().transpose();
      b.group_ids.push_back(g);
    }
  }
  // Redraw the head until no row or leave-one-out group mean has every unit dead.
  auto alive = [&](const ProjectionHead& h, const Eigen::VectorXd& x) { return (h.w1 * x + h.b1).maxCoeff() > 0; };
  for (std::uint64_t attempt = 0;; ++attempt) {
    b.head = ProjectionHead::random(dim, mix_seed(seed, 99 + attempt));
    bool ok = true;
    for (Eigen::Index i = 0; i < b.embeddings.rows() && ok; ++i) {
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
      for (Eigen::Index j = 0; j < b.embeddings.rows(); ++j)
        if (j != i && b.group_ids[j] == b.group_ids[i]) mean += b.embeddings.row(j).transpose();
      ok = alive(b.head, b.embeddings.row(i).transpose()) && alive(b.head, mean / (per_group - 1));
    }
    if (ok) return b;
  }
}

/// Squared-distance argmin by exhaustive scan, ties to the lowest index.
inline int nearest(const Eigen::MatrixXf& centroids, const std::vector<float>& v) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    double d = 0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      const double diff = static_cast<double>(v[k]) - centroids(c, static_cast<Eigen::Index>(k));
      d += diff * diff;
    }
    if (d < best_d) best_d = d, best = static_cast<int>(c);
  }
  return best;
}

/// IoU of two sets of integer positions given as half-open intervals.
inline double interval_iou(const std::vector<std::pair<std::size_t, std::size_t>>& pred,
                           std::pair<std::size_t, std::size_t> truth) {
  auto covered = [&](std::size_t p) {
    for (const auto& [b, e] : pred)
      if (p >= b && p < e) return true;
    return false;
  };
  std::size_t hi = truth.second;
  for (const auto& [b, e] : pred) hi = std::max(hi, e);
  std::size_t inter = 0, uni = 0;
  for (std::size_t p = 0; p < hi; ++p) {
    const bool in_p = covered(p), in_t = p >= truth.first && p < truth.second;
    inter += in_p && in_t;
    uni += in_p || in_t;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace vpn::oracle
