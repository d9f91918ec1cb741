#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "test_util.hpp"
#include "vpn/codebook.hpp"

using namespace vpn;

namespace {

RowMatrixF gaussian_samples(std::uint64_t seed, int n, int dim, double scale = 1.0) {
  Rng rng(seed);
  std::normal_distribution<float> g(0.0f, static_cast<float>(scale));
  RowMatrixF x(n, dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) x(i, j) = g(rng);
  return x;
}

// Four well separated 2-d blobs of 250 points each, sigma 0.1.
RowMatrixF blobs(std::uint64_t seed, std::vector<Eigen::Vector2f>& centres) {
  centres = {{0, 0}, {5, 0}, {0, 5}, {5, 5}};
  Rng rng(seed);
  std::normal_distribution<float> g(0.0f, 0.1f);
  RowMatrixF x(1000, 2);
  for (int i = 0; i < 1000; ++i) {
    const auto& c = centres[static_cast<std::size_t>(i % 4)];
    x(i, 0) = c.x() + g(rng);
    x(i, 1) = c.y() + g(rng);
  }
  return x;
}

DescriptorSet descriptors(std::size_t count, int dim, std::uint64_t seed, double stride = 0.5) {
  DescriptorSet ds;
  ds.video_id = "v";
  ds.dim = dim;
  ds.aw_stride_s = stride;
  const auto m = gaussian_samples(seed, static_cast<int>(count), dim);
  ds.data.assign(m.data(), m.data() + m.size());
  return ds;
}

Codebook small_codebook(int k, int dim, std::uint64_t seed) {
  Codebook cb;
  cb.centroids = gaussian_samples(seed, k, dim);
  return cb;
}

}  // namespace

TEST(KMeans, KEqualsNGivesZeroInertia) {
  const auto x = gaussian_samples(1, 16, 3);
  KMeansOptions opt;
  opt.k = 16;
  const auto cb = train_codebook(x, opt);
  ASSERT_FALSE(cb.inertia_history.empty());
  EXPECT_EQ(cb.inertia_history.back(), 0.0);
  std::set<int> used;
  for (int i = 0; i < 16; ++i) used.insert(assign(cb, std::span<const float>(x.data() + i * 3, 3)));
  EXPECT_EQ(used.size(), 16u);
}

TEST(KMeans, RecoversFourBlobs) {
  std::vector<Eigen::Vector2f> centres;
  const auto x = blobs(3, centres);
  KMeansOptions opt;
  opt.k = 4;
  const auto cb = train_codebook(x, opt);
  for (const auto& c : centres) {
    float best = 1e9f;
    for (int j = 0; j < 4; ++j) best = std::min(best, (cb.centroids.row(j).transpose() - c).norm());
    EXPECT_LT(best, 0.3f);
  }
}

TEST(KMeans, InertiaNonIncreasing) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    KMeansOptions opt;
    opt.k = 20;
    opt.seed = seed;
    opt.max_iters = 40;
    const auto cb = train_codebook(gaussian_samples(seed, 600, 5), opt);
    for (std::size_t i = 1; i < cb.inertia_history.size(); ++i)
      EXPECT_LE(cb.inertia_history[i], cb.inertia_history[i - 1]);
  }
}

TEST(KMeans, Deterministic) {
  const auto x = gaussian_samples(4, 300, 4);
  KMeansOptions opt;
  opt.k = 12;
  const auto a = train_codebook(x, opt), b = train_codebook(x, opt);
  EXPECT_EQ(a.centroids, b.centroids);
  opt.seed = 99;
  EXPECT_NE(train_codebook(x, opt).centroids, a.centroids);
}

TEST(KMeans, Errors) {
  KMeansOptions opt;
  opt.k = 10;
  EXPECT_VPN_ERROR(train_codebook(gaussian_samples(1, 9, 2), opt), insufficient_samples);
  RowMatrixF same = RowMatrixF::Ones(20, 2);
  EXPECT_VPN_ERROR(train_codebook(same, opt), insufficient_samples);
  opt.k = 1;
  EXPECT_VPN_ERROR(train_codebook(gaussian_samples(1, 9, 2), opt), parameter);
  opt.k = 2;
  opt.max_iters = 0;
  EXPECT_VPN_ERROR(train_codebook(gaussian_samples(1, 9, 2), opt), parameter);
}

TEST(Assign, ExactCentroidAndTie) {
  Codebook cb;
  cb.centroids.resize(3, 2);
  cb.centroids << 0, 0, 2, 0, 0, 2;
  const std::vector<float> on{2, 0}, tie{2, 2}, mid{1, 0};
  EXPECT_EQ(assign(cb, on), 1);
  EXPECT_EQ(assign(cb, tie), 1);  // equidistant to 1 and 2
  EXPECT_EQ(assign(cb, mid), 0);  // equidistant to 0 and 1
  const std::vector<float> wrong{1, 2, 3};
  EXPECT_VPN_ERROR(assign(cb, wrong), shape);
}

TEST(Assign, MatchesExhaustiveScan) {
  const auto cb = small_codebook(64, 16, 5);
  const auto x = gaussian_samples(6, 1000, 16);
  const auto batch = assign_all(cb, x);
  for (int i = 0; i < 1000; ++i) {
    const std::vector<float> v(x.data() + i * 16, x.data() + (i + 1) * 16);
    EXPECT_EQ(static_cast<int>(batch[i]), oracle::nearest(cb.centroids, v));
    EXPECT_EQ(assign(cb, v), oracle::nearest(cb.centroids, v));
  }
}

TEST(Assign, Idempotent) {
  const auto cb = small_codebook(32, 8, 7);
  for (int c = 0; c < 32; ++c) EXPECT_EQ(assign(cb, cb.centroid(c)), c);
}

TEST(Quantize, TenSecondVideoDefaults) {
  const auto ds = descriptors(19, 4, 1);
  const auto chunks = quantize_chunks(ds, small_codebook(8, 4, 2), ChunkParams{});
  ASSERT_EQ(chunks.size(), 2u);
  for (const auto& c : chunks) EXPECT_EQ(c.codewords.size(), 20u);
  EXPECT_EQ(chunks[0].valid_len, 19u);
  EXPECT_EQ(chunks[1].valid_len, 9u);
  EXPECT_DOUBLE_EQ(chunks[1].start_s, 5.0);
}

TEST(Quantize, SingleChunkWhenStrideEqualsLength) {
  ChunkParams p;
  p.chunk_stride_s = 10.0;
  const auto chunks = quantize_chunks(descriptors(19, 4, 1), small_codebook(8, 4, 2), p);
  ASSERT_EQ(chunks.size(), 1u);
  EXPECT_EQ(chunks[0].codewords.size(), 20u);
  EXPECT_EQ(chunks[0].codewords[19], chunks[0].codewords[18]);
}

TEST(Quantize, PerWindowOracleAndCoverage) {
  const auto ds = descriptors(79, 6, 3);  // a 40 s video
  const auto cb = small_codebook(16, 6, 4);
  const ChunkParams p;
  const auto chunks = quantize_chunks(ds, cb, p);
  ASSERT_EQ(chunks.size(), 8u);
  std::vector<bool> covered(ds.count(), false);
  for (const auto& c : chunks) {
    const std::size_t first = c.chunk_index * p.aw_per_stride();
    for (std::size_t j = 0; j < c.valid_len; ++j) {
      const auto row = ds.row(first + j);
      EXPECT_EQ(static_cast<int>(c.codewords[j]),
                oracle::nearest(cb.centroids, std::vector<float>(row.begin(), row.end())));
      covered[first + j] = true;
    }
    for (std::size_t j = c.valid_len; j < c.codewords.size(); ++j) EXPECT_EQ(c.codewords[j], c.codewords[c.valid_len - 1]);
    EXPECT_EQ(c.video_id, "v");
  }
  EXPECT_TRUE(std::all_of(covered.begin(), covered.end(), [](bool b) { return b; }));
}

TEST(Quantize, EmptyInput) {
  DescriptorSet ds;
  ds.dim = 4;
  EXPECT_VPN_ERROR(quantize_chunks(ds, small_codebook(4, 4, 1), ChunkParams{}), empty_input);
  ChunkParams bad;
  bad.chunk_stride_s = 20;
  EXPECT_VPN_ERROR(quantize_chunks(descriptors(5, 4, 1), small_codebook(4, 4, 1), bad), parameter);
}

TEST(Quantize, QueryChunkSequencesDropPadding) {
  const auto chunks = quantize_chunks(descriptors(19, 4, 1), small_codebook(8, 4, 2), ChunkParams{});
  const auto seqs = query_chunk_sequences(chunks);
  ASSERT_EQ(seqs.size(), 2u);
  EXPECT_EQ(seqs[0].size(), 19u);
  EXPECT_EQ(seqs[1].size(), 9u);
}

TEST(CodebookIO, RoundTrip) {
  test::TempDir dir;
  auto cb = small_codebook(10, 7, 3);
  cb.modality = Modality::audio;
  cb.train_seed = 42;
  write_codebook(cb, dir / "c.vpnc");
  const auto back = read_codebook(dir / "c.vpnc");
  EXPECT_EQ(back.centroids, cb.centroids);
  EXPECT_EQ(back.modality, Modality::audio);
  EXPECT_EQ(back.train_seed, 42u);
}

TEST(CodebookIO, RejectsDamagedFiles) {
  test::TempDir dir;
  write_codebook(small_codebook(10, 7, 3), dir / "c.vpnc");
  const auto good = test::read_bytes(dir / "c.vpnc");

  auto truncated = good;
  truncated.resize(truncated.size() - 3);
  test::write_bytes(dir / "t.vpnc", truncated);
  EXPECT_VPN_ERROR(read_codebook(dir / "t.vpnc"), corruption);

  auto magic = good;
  magic[0] = 'X';
  test::write_bytes(dir / "m.vpnc", magic);
  EXPECT_VPN_ERROR(read_codebook(dir / "m.vpnc"), format);

  auto version = good;
  version[4] = 9;
  test::write_bytes(dir / "v.vpnc", version);
  EXPECT_VPN_ERROR(read_codebook(dir / "v.vpnc"), format);

  EXPECT_VPN_ERROR(read_codebook(dir / "missing.vpnc"), io);
}
