#pragma once

// KMeans codebook: k-means++ seeding, Lloyd iterations, exact nearest
// centroid assignment and chunk quantisation.
//
// VPNC layout, little-endian:
//   "VPNC" u32 version, u8 modality, u32 K, u32 D, f32[K * D] centroids, u64 seed

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "vpn/chunk.hpp"
#include "vpn/detail/binary_io.hpp"
#include "vpn/features.hpp"
#include "vpn/linalg.hpp"

namespace vpn {

struct Codebook {
  Modality modality = Modality::visual;
  RowMatrixF centroids;  ///< K x D
  std::uint64_t train_seed = 0;
  std::vector<double> inertia_history;

  int k() const { return static_cast<int>(centroids.rows()); }
  int dim() const { return static_cast<int>(centroids.cols()); }
  std::span<const float> centroid(int i) const {
    return {centroids.data() + static_cast<std::ptrdiff_t>(i) * centroids.cols(),
            static_cast<std::size_t>(centroids.cols())};
  }
};

struct KMeansOptions {
  int k = 1024;
  int max_iters = 25;
  std::uint64_t seed = 11;
  double tolerance = 1e-6;  ///< relative inertia improvement that counts as converged
};

namespace detail {

inline double sq_dist(std::span<const float> a, std::span<const float> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return s;
}

// Exact argmin over centroids, smallest index on ties.
inline int argmin_exact(const Codebook& cb, std::span<const float> v) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c = 0; c < cb.k(); ++c) {
    const double d = sq_dist(v, cb.centroid(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

// Approximate squared distances via one GEMM: |x|^2 - 2 x.c + |c|^2.
inline RowMatrixF gemm_sq_dists(const RowMatrixF& x, const RowMatrixF& c) {
  const Eigen::VectorXf xn = x.rowwise().squaredNorm();
  const Eigen::VectorXf cn = c.rowwise().squaredNorm();
  RowMatrixF d = -2.0f * (x * c.transpose());
  d.colwise() += xn;
  d.rowwise() += cn.transpose();
  return d;
}

}  // namespace detail

inline int assign(const Codebook& cb, std::span<const float> vec) {
  require(static_cast<int>(vec.size()) == cb.dim(), ErrorCode::shape, "descriptor dimension does not match codebook");
  return detail::argmin_exact(cb, vec);
}

/// Assigns every row of `x`. Candidates within a float-rounding margin of
/// the GEMM minimum are re-scored exactly, so the result equals a row-by-row
/// exact scan.
inline std::vector<Codeword> assign_all(const Codebook& cb, const RowMatrixF& x) {
  require(x.cols() == cb.dim(), ErrorCode::shape, "descriptor dimension does not match codebook");
  std::vector<Codeword> out(static_cast<std::size_t>(x.rows()));
  constexpr Eigen::Index kBlock = 512;
  const float cmax = cb.centroids.rowwise().squaredNorm().maxCoeff();
  for (Eigen::Index r0 = 0; r0 < x.rows(); r0 += kBlock) {
    const Eigen::Index rows = std::min(kBlock, x.rows() - r0);
    const RowMatrixF block = x.middleRows(r0, rows);
    const RowMatrixF d = detail::gemm_sq_dists(block, cb.centroids);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const float lo = d.row(i).minCoeff();
      const float margin = 1e-4f * (1.0f + cmax + block.row(i).squaredNorm());
      const std::span<const float> v(block.data() + i * block.cols(), static_cast<std::size_t>(block.cols()));
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < cb.k(); ++c) {
        if (d(i, c) > lo + margin) continue;
        const double e = detail::sq_dist(v, cb.centroid(c));
        if (e < best_d) {
          best_d = e;
          best = c;
        }
      }
      out[static_cast<std::size_t>(r0 + i)] = static_cast<Codeword>(best);
    }
  }
  return out;
}

inline RowMatrixF to_matrix(const DescriptorSet& ds) {
  RowMatrixF m(static_cast<Eigen::Index>(ds.count()), ds.dim);
  std::copy(ds.data.begin(), ds.data.end(), m.data());
  return m;
}

inline Codebook train_codebook(const RowMatrixF& samples, const KMeansOptions& opt,
                               Modality modality = Modality::visual) {
  const auto n = samples.rows();
  require(opt.k >= 2, ErrorCode::parameter, "K must be >= 2");
  require(opt.max_iters >= 1, ErrorCode::parameter, "max_iters must be >= 1");
  require(n >= opt.k, ErrorCode::insufficient_samples,
          "need at least K=" + std::to_string(opt.k) + " samples, got " + std::to_string(n));
  require(samples.allFinite(), ErrorCode::data, "non-finite training sample");
  const int k = opt.k;
  const auto dim = samples.cols();
  Rng rng(mix_seed(opt.seed, 0xC0DE));

  // k-means++ seeding.
  RowMatrixF c(k, dim);
  std::vector<double> min_d(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  auto add_center = [&](int slot, Eigen::Index idx) {
    c.row(slot) = samples.row(idx);
    const std::span<const float> cs(c.data() + static_cast<std::ptrdiff_t>(slot) * dim, static_cast<std::size_t>(dim));
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::span<const float> xs(samples.data() + i * dim, static_cast<std::size_t>(dim));
      min_d[static_cast<std::size_t>(i)] = std::min(min_d[static_cast<std::size_t>(i)], detail::sq_dist(xs, cs));
    }
  };
  add_center(0, std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng));
  for (int s = 1; s < k; ++s) {
    const double total = std::accumulate(min_d.begin(), min_d.end(), 0.0);
    require(total > 0, ErrorCode::insufficient_samples, "fewer distinct samples than K");
    double target = uniform(rng, 0.0, total);
    Eigen::Index pick = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = min_d[static_cast<std::size_t>(i)];
      if (w <= 0) continue;
      pick = i;
      if (target < w) break;
      target -= w;
    }
    add_center(s, pick);
  }

  Codebook cb;
  cb.modality = modality;
  cb.train_seed = opt.seed;
  std::vector<int> labels(static_cast<std::size_t>(n));
  std::vector<double> dist(static_cast<std::size_t>(n));
  RowMatrixF prev;
  bool stopped = false;
  for (int it = 0; it < opt.max_iters && !stopped; ++it) {
    cb.centroids = c;
    const auto assigned = assign_all(cb, samples);
    double inertia = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      labels[static_cast<std::size_t>(i)] = static_cast<int>(assigned[static_cast<std::size_t>(i)]);
      const std::span<const float> xs(samples.data() + i * dim, static_cast<std::size_t>(dim));
      dist[static_cast<std::size_t>(i)] = detail::sq_dist(xs, cb.centroid(labels[static_cast<std::size_t>(i)]));
      inertia += dist[static_cast<std::size_t>(i)];
    }
    if (!cb.inertia_history.empty()) {
      const double last = cb.inertia_history.back();
      if (inertia > last) {  // float rounding at convergence; keep the better centroids
        cb.centroids = prev;
        stopped = true;
        break;
      }
      cb.inertia_history.push_back(inertia);
      if (last - inertia <= opt.tolerance * last) {
        stopped = true;
        break;
      }
    } else {
      cb.inertia_history.push_back(inertia);
    }
    if (inertia == 0) {
      stopped = true;
      break;
    }

    prev = c;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, dim);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int l = labels[static_cast<std::size_t>(i)];
      sums.row(l) += samples.row(i).cast<double>();
      ++counts[static_cast<std::size_t>(l)];
    }
    std::vector<Eigen::Index> by_dist(static_cast<std::size_t>(n));
    std::iota(by_dist.begin(), by_dist.end(), 0);
    std::stable_sort(by_dist.begin(), by_dist.end(), [&](Eigen::Index a, Eigen::Index b) {
      return dist[static_cast<std::size_t>(a)] > dist[static_cast<std::size_t>(b)];
    });
    std::size_t next_far = 0;
    for (int j = 0; j < k; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) {
        c.row(j) = (sums.row(j) / counts[static_cast<std::size_t>(j)]).cast<float>();
      } else {
        // Empty cluster: move it onto the point worst served by its centroid.
        const Eigen::Index far = by_dist[next_far++];
        c.row(j) = samples.row(far);
        dist[static_cast<std::size_t>(far)] = 0;
      }
    }
  }
  // Budget exhausted: the last mean update can only lower inertia further.
  if (!stopped) cb.centroids = c;
  return cb;
}

/// Quantises a descriptor set into overlapping chunks of `ceil(l / s_f)`
/// codewords. Chunk i holds the AWs whose start falls in
/// [i * s_c, i * s_c + l); short chunks are padded by repeating their last
/// codeword (or the video's last codeword if the chunk holds no AW). There
/// are ceil(duration / s_c) chunks, with duration = last AW end.
inline std::vector<Chunk> quantize_chunks(const DescriptorSet& desc, const Codebook& cb, ChunkParams p) {
  require(desc.count() > 0, ErrorCode::empty_input, "empty descriptor set");
  p.aw_stride_s = desc.aw_stride_s;
  check(p);
  const auto codes = assign_all(cb, to_matrix(desc));
  const std::size_t n = p.codewords_per_chunk();
  const double duration = static_cast<double>(desc.count() - 1) * desc.aw_stride_s + desc.aw_len_s;
  const auto n_chunks = static_cast<std::size_t>(std::ceil(duration / p.chunk_stride_s - 1e-9));
  constexpr double kEps = 1e-9;

  std::vector<Chunk> chunks;
  chunks.reserve(n_chunks);
  for (std::size_t i = 0; i < n_chunks; ++i) {
    Chunk ch;
    ch.chunk_id = i;
    ch.video_id = desc.video_id;
    ch.chunk_index = static_cast<std::uint32_t>(i);
    ch.start_s = static_cast<double>(i) * p.chunk_stride_s;
    for (std::size_t j = 0; j < codes.size() && ch.codewords.size() < n; ++j) {
      const double t = static_cast<double>(j) * desc.aw_stride_s;
      if (t >= ch.start_s - kEps && t < ch.start_s + p.chunk_len_s - kEps) ch.codewords.push_back(codes[j]);
    }
    ch.valid_len = static_cast<std::uint32_t>(ch.codewords.size());
    const Codeword pad = ch.codewords.empty() ? codes.back() : ch.codewords.back();
    ch.codewords.resize(n, pad);
    chunks.push_back(std::move(ch));
  }
  return chunks;
}

inline constexpr std::uint32_t kCodebookVersion = 1;

inline void write_codebook(const Codebook& cb, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.put_bytes("VPNC");
  w.put(kCodebookVersion);
  w.put(static_cast<std::uint8_t>(cb.modality));
  w.put(static_cast<std::uint32_t>(cb.k()));
  w.put(static_cast<std::uint32_t>(cb.dim()));
  w.put_span<float>(std::span<const float>(cb.centroids.data(), static_cast<std::size_t>(cb.centroids.size())));
  w.put(cb.train_seed);
  w.write_file(path);
}

inline Codebook read_codebook(const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path);
  r.expect_magic("VPNC", kCodebookVersion);
  Codebook cb;
  const auto mod = r.get<std::uint8_t>();
  if (mod > 2) fail(ErrorCode::format, "unknown modality tag");
  cb.modality = static_cast<Modality>(mod);
  const auto k = r.get<std::uint32_t>();
  const auto d = r.get<std::uint32_t>();
  if (std::uint64_t{k} * d * sizeof(float) + sizeof(std::uint64_t) != r.remaining())
    fail(ErrorCode::corruption, "codebook payload does not match K x D: " + path.string());
  if (k < 2 || d == 0) fail(ErrorCode::corruption, "degenerate codebook shape");
  cb.centroids.resize(k, d);
  r.get_into<float>(std::span<float>(cb.centroids.data(), static_cast<std::size_t>(cb.centroids.size())));
  cb.train_seed = r.get<std::uint64_t>();
  if (!cb.centroids.allFinite()) fail(ErrorCode::corruption, "non-finite centroid");
  return cb;
}

}  // namespace vpn
