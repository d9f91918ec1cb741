#include <cmath>
#include <numeric>

#include "test_util.hpp"
#include "vpn/encoders.hpp"
#include "vpn/features.hpp"
#include "vpn/media.hpp"

using namespace vpn;

namespace {

CorpusParams params(double dur, int count = 1) {
  CorpusParams p;
  p.duration_s = dur;
  p.count = count;
  return p;
}

Frame constant_frame(int h, int w, float v) {
  Frame f(h, w);
  std::fill(f.data.begin(), f.data.end(), v);
  return f;
}

std::vector<float> tone(double hz, int sr) {
  std::vector<float> w(static_cast<std::size_t>(sr));
  for (int i = 0; i < sr; ++i) w[i] = static_cast<float>(0.5 * std::sin(2 * M_PI * hz * i / sr));
  return w;
}

void expect_unit_rows(const DescriptorSet& ds) {
  for (std::size_t i = 0; i < ds.count(); ++i) EXPECT_NEAR(norm(ds.row(i)), 1.0, 1e-6);
}

}  // namespace

TEST(AwCount, Formula) {
  EXPECT_EQ(aw_count(10.0, 0.5), 19u);
  EXPECT_EQ(aw_count(1.0, 0.5), 1u);
  EXPECT_EQ(aw_count(0.99, 0.5), 0u);
  EXPECT_EQ(aw_count(3.2, 0.5), 5u);
  EXPECT_EQ(aw_count(10.0, 1.0), 10u);
}

TEST(ExtractVisual, CountAndUnitNorm) {
  const auto a = gen_asset(params(10.0), 0);
  const auto ds = extract_visual(a, EncoderSpec::visual());
  EXPECT_EQ(ds.count(), 19u);
  EXPECT_EQ(ds.dim, 256);
  EXPECT_EQ(ds.modality, Modality::visual);
  expect_unit_rows(ds);
}

TEST(ExtractVisual, IdenticalFramesGiveEqualVectors) {
  auto a = gen_asset(params(3.0), 0);
  for (auto& f : a.frames) f = a.frames[5];
  const auto ds = extract_visual(a, EncoderSpec::visual());
  for (std::size_t i = 1; i < ds.count(); ++i)
    for (int d = 0; d < ds.dim; ++d) EXPECT_EQ(ds.row(i)[d], ds.row(0)[d]);
}

TEST(ExtractVisual, MatchesPerFrameOracle) {
  const auto a = gen_asset(params(4.0), 1);
  const auto ds = extract_visual(a, EncoderSpec::visual());
  for (std::size_t j = 0; j < ds.count(); ++j) {
    std::vector<double> acc(256, 0.0);
    for (int t = 0; t < 16; ++t) {
      const auto e = baseline_visual_encode(a.frames[j * 8 + t]);
      for (int d = 0; d < 256; ++d) acc[d] += e[d];
    }
    std::vector<float> mean(256);
    for (int d = 0; d < 256; ++d) mean[d] = static_cast<float>(acc[d] / 16);
    normalize(mean);
    for (int d = 0; d < 256; ++d) ASSERT_NEAR(ds.row(j)[d], mean[d], 1e-6);
  }
}

TEST(ExtractVisual, NearestFrameResampling) {
  // An 8 fps asset is read by repeating each frame twice at the 16 fps logical rate.
  auto p = params(2.0);
  p.fps = 8;
  const auto a = gen_asset(p, 0);
  const auto ds = extract_visual(a, EncoderSpec::visual());
  EXPECT_EQ(ds.count(), 3u);
  expect_unit_rows(ds);
}

TEST(ExtractVisual, ShortInput) {
  auto a = gen_asset(params(2.0), 0);
  a = truncate(a, 0, 1.0);
  a.frames.resize(10);
  EXPECT_VPN_ERROR(extract_visual(a, EncoderSpec::visual()), short_input);
}

TEST(ExtractAudio, CountMatchesVisual) {
  const auto a = gen_asset(params(10.0), 0);
  const auto v = extract_visual(a, EncoderSpec::visual());
  const auto s = extract_audio(a, EncoderSpec::audio());
  EXPECT_EQ(s.count(), 19u);
  EXPECT_EQ(s.count(), v.count());
  expect_unit_rows(s);
}

TEST(ExtractAudio, SilenceGivesEqualDescriptors) {
  auto a = gen_asset(params(3.0), 0);
  std::fill(a.waveform.begin(), a.waveform.end(), 0.0f);
  const auto ds = extract_audio(a, EncoderSpec::audio());
  for (std::size_t i = 1; i < ds.count(); ++i)
    for (int d = 0; d < ds.dim; ++d) EXPECT_EQ(ds.row(i)[d], ds.row(0)[d]);
}

TEST(ExtractAudio, MatchesStandaloneWindow) {
  const auto a = gen_asset(params(5.0), 2);
  const auto ds = extract_audio(a, EncoderSpec::audio());
  const std::vector<float> slice(a.waveform.begin() + 32000, a.waveform.begin() + 48000);
  const auto e = baseline_audio_encode(slice, 16000);
  for (int d = 0; d < 256; ++d) EXPECT_EQ(ds.row(4)[d], e[d]);
}

TEST(ExtractAudio, ShortInput) {
  auto a = gen_asset(params(2.0), 0);
  a.waveform.resize(15999);
  EXPECT_VPN_ERROR(extract_audio(a, EncoderSpec::audio()), short_input);
}

TEST(VisualEncoder, ConstantFrameAnySize) {
  const auto a = baseline_visual_encode(constant_frame(36, 48, 0.5f));
  const auto b = baseline_visual_encode(constant_frame(90, 17, 0.5f));
  EXPECT_NEAR(norm(a), 1.0, 1e-6);
  for (int d = 0; d < 256; ++d) EXPECT_NEAR(a[d], b[d], 1e-6);
  EXPECT_VPN_ERROR(baseline_visual_encode(Frame{}), shape);
}

TEST(VisualEncoder, DeterministicAndNoiseRobust) {
  const auto a = gen_asset(params(2.0), 3);
  const auto p = perturb_visual(a, {PerturbationKind::noise, {0.01}, 11});
  EXPECT_EQ(baseline_visual_encode(a.frames[0]), baseline_visual_encode(a.frames[0]));
  double sum = 0;
  for (std::size_t f = 0; f < a.frames.size(); f += 4) {
    const double c = cosine(baseline_visual_encode(a.frames[f]), baseline_visual_encode(p.frames[f]));
    EXPECT_GT(c, 0.95);
    sum += c;
  }
  EXPECT_GT(sum / 8, 0.95);
}

TEST(VisualEncoder, IndependentFramesDiffer) {
  const auto corpus = gen_corpus(31, 100, 1.0, 16, 16000);
  double sum = 0;
  for (int i = 0; i < 100; ++i)
    sum += cosine(baseline_visual_encode(corpus[i].frames[0]), baseline_visual_encode(corpus[(i + 1) % 100].frames[7]));
  EXPECT_LT(sum / 100, 0.9);
}

TEST(AudioEncoder, SilenceToneAndShape) {
  const std::vector<float> silence(16000, 0.0f);
  const auto s = baseline_audio_encode(silence, 16000);
  EXPECT_NEAR(norm(s), 1.0, 1e-6);
  EXPECT_EQ(s, baseline_audio_encode(silence, 16000));
  EXPECT_LT(cosine(baseline_audio_encode(tone(440, 16000), 16000), baseline_audio_encode(tone(880, 16000), 16000)),
            0.99);
  EXPECT_VPN_ERROR(baseline_audio_encode(std::vector<float>(15000, 0.0f), 16000), shape);
}

TEST(AudioEncoder, NoiseRobust) {
  const auto a = gen_asset(params(6.0), 4);
  const auto p = perturb_audio(a, {PerturbationKind::audio_noise, {5.0}, 2});
  const auto x = extract_audio(a, EncoderSpec::audio(), 1.0);
  const auto y = extract_audio(p, EncoderSpec::audio(), 1.0);
  double sum = 0;
  for (std::size_t i = 0; i < x.count(); ++i) sum += cosine(x.row(i), y.row(i));
  EXPECT_GT(sum / static_cast<double>(x.count()), 0.9);
}

// Every implemented perturbation keeps descriptors closer to their source than
// unrelated assets are, by at least 0.2 in mean cosine over 100 assets.
TEST(Encoders, RobustnessMarginOverCrossAsset) {
  const auto corpus = gen_corpus(77, 100, 2.0, 16, 16000);
  std::vector<DescriptorSet> v, a;
  for (const auto& x : corpus) {
    v.push_back(extract_visual(x, EncoderSpec::visual(), 1.0));
    a.push_back(extract_audio(x, EncoderSpec::audio(), 1.0));
  }
  double cross_v = 0, cross_a = 0;
  for (int i = 0; i < 100; ++i) {
    cross_v += cosine(v[i].row(0), v[(i + 1) % 100].row(0));
    cross_a += cosine(a[i].row(0), a[(i + 1) % 100].row(0));
  }
  cross_v /= 100;
  cross_a /= 100;
  Rng rng(5);
  for (auto kind : kVisualKinds) {
    double s = 0;
    for (int i = 0; i < 100; ++i)
      s += cosine(v[i].row(0),
                  extract_visual(perturb_visual(corpus[i], sample_perturbation(kind, rng)), EncoderSpec::visual(), 1.0)
                      .row(0));
    EXPECT_GE(s / 100 - cross_v, 0.2) << to_string(kind);
  }
  for (auto kind : {PerturbationKind::audio_noise, PerturbationKind::audio_clip}) {
    double s = 0;
    for (int i = 0; i < 100; ++i)
      s += cosine(a[i].row(0),
                  extract_audio(perturb_audio(corpus[i], sample_perturbation(kind, rng)), EncoderSpec::audio(), 1.0)
                      .row(0));
    EXPECT_GE(s / 100 - cross_a, 0.2) << to_string(kind);
  }
}

TEST(EncoderSpec, LearnedAndExternal) {
  const auto a = gen_asset(params(2.0), 0);
  RowMatrixF w = RowMatrixF::Zero(64, 256);
  for (int i = 0; i < 64; ++i) w(i, i) = 1.0f;
  const auto ds = extract_visual(a, EncoderSpec::learned(w));
  EXPECT_EQ(ds.dim, 64);
  expect_unit_rows(ds);
  EncoderSpec missing{EncoderKind::linear_learned, std::nullopt, 64};
  EXPECT_VPN_ERROR(extract_visual(a, missing), configuration);
  EncoderSpec ext{EncoderKind::external, std::nullopt, 256};
  EXPECT_VPN_ERROR(extract_visual(a, ext), configuration);
  EXPECT_VPN_ERROR(extract_visual(a, EncoderSpec::audio()), modality);
}

TEST(DescriptorIo, RoundTripBitExact) {
  test::TempDir dir;
  auto ds = extract_audio(gen_asset(params(3.0), 0), EncoderSpec::audio());
  ds.t0_s = 1.25;
  write_descriptors(ds, dir / "vid00000.vpnd");
  EXPECT_EQ(read_descriptors(dir / "vid00000.vpnd"), ds);
}

TEST(DescriptorIo, NegativeCases) {
  test::TempDir dir;
  const auto ds = extract_visual(gen_asset(params(3.0), 0), EncoderSpec::visual());
  write_descriptors(ds, dir / "vid00000.vpnd");
  const auto bytes = test::read_bytes(dir / "vid00000.vpnd");

  auto bad = bytes;
  bad[1] = 'Q';
  test::write_bytes(dir / "magic.vpnd", bad);
  EXPECT_VPN_ERROR(read_descriptors(dir / "magic.vpnd"), format);

  bad = bytes;
  bad[4] = 9;  // version
  test::write_bytes(dir / "version.vpnd", bad);
  EXPECT_VPN_ERROR(read_descriptors(dir / "version.vpnd"), format);

  bad = bytes;
  bad[13] += 1;  // count field, after magic, version, modality, dim
  test::write_bytes(dir / "count.vpnd", bad);
  EXPECT_VPN_ERROR(read_descriptors(dir / "count.vpnd"), corruption);

  bad = bytes;
  bad.resize(bytes.size() - 3);
  test::write_bytes(dir / "short.vpnd", bad);
  EXPECT_VPN_ERROR(read_descriptors(dir / "short.vpnd"), corruption);
}

TEST(DescriptorIo, ExternalChecksDimension) {
  test::TempDir dir;
  const auto ds = extract_visual(gen_asset(params(2.0), 0), EncoderSpec::visual());
  write_descriptors(ds, dir / "x.vpnd");
  EXPECT_EQ(read_external(dir / "x.vpnd", {EncoderKind::external, std::nullopt, 256}).count(), ds.count());
  EXPECT_VPN_ERROR(read_external(dir / "x.vpnd", {EncoderKind::external, std::nullopt, 128}), shape);
}
