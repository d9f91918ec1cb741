#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "test_util.hpp"
#include "vpn/codebook.hpp"
#include "vpn/rerank.hpp"

using namespace vpn;

namespace {

CodewordSeq random_seq(Rng& rng, std::size_t n, int lo, int hi) {
  CodewordSeq s(n);
  for (auto& c : s) c = static_cast<Codeword>(uniform_int(rng, lo, hi));
  return s;
}

// Splits a whole-video sequence into chunks of n codewords every m positions.
std::vector<Chunk> chunk_sequence(const CodewordSeq& seq, const std::string& video, std::uint64_t first_id,
                                  std::size_t n = 4, std::size_t m = 2) {
  std::vector<Chunk> out;
  for (std::size_t start = 0, i = 0; start < seq.size(); start += m, ++i) {
    Chunk c;
    c.chunk_id = first_id + i;
    c.video_id = video;
    c.chunk_index = static_cast<std::uint32_t>(i);
    c.start_s = static_cast<double>(start) * 0.5;
    const std::size_t end = std::min(seq.size(), start + n);
    c.codewords.assign(seq.begin() + static_cast<std::ptrdiff_t>(start), seq.begin() + static_cast<std::ptrdiff_t>(end));
    c.valid_len = static_cast<std::uint32_t>(c.codewords.size());
    c.codewords.resize(n, c.codewords.back());
    out.push_back(std::move(c));
  }
  return out;
}

InvertedIndex index_of(const std::vector<std::pair<std::string, CodewordSeq>>& videos, std::uint32_t k) {
  std::vector<Chunk> all;
  for (const auto& [id, seq] : videos) {
    auto c = chunk_sequence(seq, id, all.size());
    all.insert(all.end(), c.begin(), c.end());
  }
  return InvertedIndex::build(std::move(all), k);
}

}  // namespace

TEST(Levenshtein, KnownPair) {
  const CodewordSeq kitten{'k', 'i', 't', 't', 'e', 'n'}, sitting{'s', 'i', 't', 't', 'i', 'n', 'g'};
  EXPECT_EQ(levenshtein(kitten, sitting), 3u);
  EXPECT_EQ(oracle::levenshtein(kitten, sitting), 3u);
  EXPECT_EQ(levenshtein(kitten, CodewordSeq{}), 6u);
  EXPECT_EQ(levenshtein(CodewordSeq{}, CodewordSeq{}), 0u);
}

TEST(Levenshtein, MetricAxiomsAndOracle) {
  Rng rng(1);
  for (int t = 0; t < 300; ++t) {
    const auto a = random_seq(rng, uniform_int(rng, 0, 12), 0, 3);
    const auto b = random_seq(rng, uniform_int(rng, 0, 12), 0, 3);
    const auto c = random_seq(rng, uniform_int(rng, 0, 12), 0, 3);
    const auto ab = levenshtein(a, b);
    EXPECT_EQ(ab, oracle::levenshtein(a, b));
    EXPECT_EQ(ab, levenshtein(b, a));
    EXPECT_EQ(levenshtein(a, a), 0u);
    EXPECT_EQ(ab == 0, a == b);
    EXPECT_LE(levenshtein(a, c), ab + levenshtein(b, c));
    EXPECT_GE(ab, a.size() > b.size() ? a.size() - b.size() : b.size() - a.size());
    EXPECT_LE(ab, std::max(a.size(), b.size()));
  }
}

TEST(VideoSequence, SingleChunk) {
  const CodewordSeq s{4, 5, 6};
  EXPECT_EQ(video_sequence(chunk_sequence(s, "v", 0, 4, 4), 0.5), s);
}

TEST(VideoSequence, ReassemblesOverlappingChunks) {
  Rng rng(2);
  for (std::size_t len : {1u, 3u, 4u, 5u, 6u, 17u}) {
    const auto s = random_seq(rng, len, 0, 9);
    EXPECT_EQ(video_sequence(chunk_sequence(s, "v", 0), 0.5), s) << len;
  }
}

TEST(VideoSequence, MatchesPerWindowQuantization) {
  Rng rng(3);
  std::normal_distribution<float> g;
  DescriptorSet ds;
  ds.video_id = "v";
  ds.dim = 4;
  ds.data.resize(4 * 59);
  for (auto& x : ds.data) x = g(rng);
  Codebook cb;
  cb.centroids.resize(10, 4);
  for (int i = 0; i < 40; ++i) cb.centroids.data()[i] = g(rng);
  const auto seq = video_sequence(quantize_chunks(ds, cb, ChunkParams{}), 0.5);
  ASSERT_EQ(seq.size(), ds.count());
  for (std::size_t i = 0; i < ds.count(); ++i) {
    const auto r = ds.row(i);
    EXPECT_EQ(static_cast<int>(seq[i]), oracle::nearest(cb.centroids, std::vector<float>(r.begin(), r.end())));
  }
}

TEST(VideoSequence, RejectsGapsAndMixedVideos) {
  auto chunks = chunk_sequence({1, 2, 3, 4, 5, 6, 7, 8}, "v", 0);
  auto gap = chunks;
  gap.erase(gap.begin() + 1);
  EXPECT_VPN_ERROR(video_sequence(gap, 0.5), integrity);
  auto mixed = chunks;
  mixed[2].video_id = "w";
  EXPECT_VPN_ERROR(video_sequence(mixed, 0.5), integrity);
  auto hole = chunks;
  hole[1].start_s = 4.0;
  hole[2].start_s = 6.0;
  EXPECT_VPN_ERROR(video_sequence(hole, 0.5), integrity);
}

TEST(WindowEdit, MinimumOverWindows) {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const auto q = random_seq(rng, uniform_int(rng, 1, 6), 0, 3);
    const auto c = random_seq(rng, uniform_int(rng, 1, 12), 0, 3);
    std::size_t expected = oracle::levenshtein(q, c);
    if (c.size() > q.size()) {
      expected = SIZE_MAX;
      for (std::size_t j = 0; j + q.size() <= c.size(); ++j)
        expected = std::min(expected, oracle::levenshtein(q, CodewordSeq(c.begin() + j, c.begin() + j + q.size())));
    }
    EXPECT_EQ(window_edit_distance(q, c), expected);
  }
}

TEST(Rerank, ExactContainmentWinsOverHigherTfidf) {
  const CodewordSeq q{1, 2, 3, 4};
  // "b" has the query codewords many times but never in order.
  const auto idx = index_of({{"a", {9, 9, 1, 2, 3, 4, 9, 9}}, {"b", {4, 3, 2, 1, 4, 3, 2, 1, 4, 3}}}, 10);
  const auto shortlist = idx.query_topk({q}, 10);
  ASSERT_EQ(shortlist[0].video_id, "b");
  const auto r = rerank(shortlist, q, idx);
  EXPECT_EQ(r[0].video_id, "a");
  EXPECT_EQ(r[0].edit_distance, 0u);
  EXPECT_EQ(r[0].final_rank, 1u);
  EXPECT_GT(r[1].edit_distance, 0u);
}

TEST(Rerank, PermutedDecoyRanksBelowTrueSource) {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto q = random_seq(rng, 8, 0, 31);
    auto decoy = q;
    do std::shuffle(decoy.begin(), decoy.end(), rng);
    while (levenshtein(decoy, q) < 4);
    const auto idx = index_of({{"decoy", decoy}, {"source", q}}, 32);
    const auto r = rerank(idx.query_topk({q}, 10), q, idx);
    EXPECT_EQ(r[0].video_id, "source");
  }
}

TEST(Rerank, TieRule) {
  std::vector<RankedResult> r{{"c", 1.0, 2, 0}, {"b", 2.0, 2, 0}, {"a", 2.0, 2, 0}, {"d", 0.5, 1, 0}};
  assign_ranks(r);
  EXPECT_EQ(r[0].video_id, "d");
  EXPECT_EQ(r[1].video_id, "a");
  EXPECT_EQ(r[2].video_id, "b");
  EXPECT_EQ(r[3].video_id, "c");
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_EQ(r[i].final_rank, i + 1);
}

TEST(Rerank, IndependentOfShortlistOrder) {
  const auto c = test::toy_corpus(6, 12, 3, 6);
  const auto idx = InvertedIndex::build(c.chunks, c.k, Modality::visual, 2.5);
  const CodewordSeq q{1, 2, 3};
  auto shortlist = idx.query_topk({q}, 12);
  const auto a = rerank(shortlist, q, idx);
  std::reverse(shortlist.begin(), shortlist.end());
  EXPECT_EQ(rerank(shortlist, q, idx), a);
  EXPECT_EQ(rerank(shortlist, q, idx), a);
}

TEST(Localize, FindsPlantedWindow) {
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    auto cand = random_seq(rng, 60, 0, 49);
    const auto q = random_seq(rng, 20, 50, 99);
    std::copy(q.begin(), q.end(), cand.begin() + 10);
    const auto h = localize(q, cand, 1, "v");
    EXPECT_EQ(h.best_offset, 10u);
    EXPECT_EQ(h.distances[10], 0u);
    EXPECT_EQ(h.offsets.size(), 41u);
    EXPECT_DOUBLE_EQ(localization_iou(h, 0, {10, 30}), 1.0);
  }
}

TEST(Localize, ConstantSequenceTiesPickFirst) {
  const CodewordSeq cand(30, 4), q(5, 4);
  const auto h = localize(q, cand);
  EXPECT_EQ(h.best_offset, 0u);
  EXPECT_TRUE(std::all_of(h.distances.begin(), h.distances.end(), [](auto d) { return d == 0; }));
  EXPECT_DOUBLE_EQ(localization_iou(h, 0, {0, 30}), 1.0);
}

TEST(Localize, StrideAndDistancesMatchWindows) {
  Rng rng(8);
  const auto cand = random_seq(rng, 25, 0, 4), q = random_seq(rng, 6, 0, 4);
  const auto h = localize(q, cand, 3);
  ASSERT_EQ(h.offsets.size(), 7u);
  std::size_t best = SIZE_MAX;
  for (std::size_t i = 0; i < h.offsets.size(); ++i) {
    EXPECT_EQ(h.offsets[i], 3 * i);
    EXPECT_EQ(h.distances[i], oracle::levenshtein(q, CodewordSeq(cand.begin() + 3 * i, cand.begin() + 3 * i + 6)));
    best = std::min(best, h.distances[i]);
  }
  EXPECT_EQ(h.distances[h.best_offset / 3], best);
  EXPECT_EQ(localize(q, cand).distances[localize(q, cand).best_offset], window_edit_distance(q, cand));
  const auto j = h.to_json();
  EXPECT_EQ(j["offsets"].size(), 7u);
  EXPECT_EQ(j["best_offset"], h.best_offset);
}

TEST(Localize, Errors) {
  const CodewordSeq q{1, 2, 3}, shorter{1, 2};
  EXPECT_VPN_ERROR(localize(q, shorter), length);
  EXPECT_VPN_ERROR(localize(CodewordSeq{}, q), empty_query);
  EXPECT_VPN_ERROR(localize(q, q, 0), parameter);
}

TEST(LocalizationIou, SimpleCases) {
  LocalizationHeatmap h;
  h.query_len = 5;
  h.offsets = {0, 5, 10};
  h.distances = {3, 0, 3};
  EXPECT_DOUBLE_EQ(localization_iou(h, 0, {5, 10}), 1.0);
  EXPECT_DOUBLE_EQ(localization_iou(h, 0, {10, 15}), 0.0);
  EXPECT_DOUBLE_EQ(localization_iou(h, 0, {5, 15}), 0.5);
  EXPECT_DOUBLE_EQ(localization_iou(h, -1, {}), 1.0);
  EXPECT_DOUBLE_EQ(localization_iou(h, 3, {0, 15}), 1.0);
}

TEST(LocalizationIou, MatchesIntervalOracle) {
  Rng rng(9);
  for (int t = 0; t < 200; ++t) {
    LocalizationHeatmap h;
    h.query_len = static_cast<std::size_t>(uniform_int(rng, 1, 6));
    const int n = uniform_int(rng, 1, 10);
    std::vector<std::pair<std::size_t, std::size_t>> pred;
    for (int i = 0; i < n; ++i) {
      h.offsets.push_back(static_cast<std::size_t>(i));
      h.distances.push_back(static_cast<std::size_t>(uniform_int(rng, 0, 3)));
      if (h.distances.back() <= 1) pred.emplace_back(i, i + h.query_len);
    }
    const std::size_t b = static_cast<std::size_t>(uniform_int(rng, 0, 10));
    const std::size_t e = b + static_cast<std::size_t>(uniform_int(rng, 1, 8));
    EXPECT_NEAR(localization_iou(h, 1, {b, e}), oracle::interval_iou(pred, {b, e}), 1e-12);
  }
}
