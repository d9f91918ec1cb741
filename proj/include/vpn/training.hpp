#pragma once

// Augmentation groups for contrastive training, drawn from synthetic assets.
// Each group is one frame, audio window or AW; its members are the clean
// input plus randomly perturbed views.

#include <string>

#include "vpn/contrastive.hpp"
#include "vpn/fusion.hpp"
#include "vpn/media.hpp"

namespace vpn {

struct GroupOptions {
  int groups = 64;
  int views = 3;  ///< members per group, the clean view included
  std::uint64_t seed = 1;
};

namespace detail {

inline VideoAsset random_view(const VideoAsset& a, Rng& rng, bool visual, bool audio) {
  VideoAsset out = a;
  if (visual)
    out = perturb_visual(
        out, sample_perturbation(kVisualKinds[uniform_int(rng, 0, static_cast<int>(std::size(kVisualKinds)) - 1)], rng));
  if (audio)
    out = perturb_audio(
        out, sample_perturbation(kAudioKinds[uniform_int(rng, 0, static_cast<int>(std::size(kAudioKinds)) - 1)], rng));
  return out;
}

}  // namespace detail

/// Groups for `modality`: visual inputs are 256-d baseline frame embeddings,
/// audio inputs 256-d baseline window embeddings, fused inputs the 512-d
/// learned-fusion inputs of one AW.
inline TrainingGroups make_training_groups(const CorpusParams& corpus, Modality modality, const GroupOptions& opt) {
  require(opt.groups >= 8 && opt.views >= 2, ErrorCode::parameter, "need >= 8 groups of >= 2 views");
  require(corpus.count >= 1, ErrorCode::parameter, "corpus is empty");
  Rng rng(mix_seed(opt.seed, 0x67C0));
  TrainingGroups data;
  for (int g = 0; g < opt.groups; ++g) {
    const auto asset = gen_asset(corpus, g % corpus.count);
    const double dur = asset.duration_s();
    const double t = std::floor(uniform(rng, 0, dur - 1.0) * 2) / 2;
    for (int v = 0; v < opt.views; ++v) {
      std::vector<float> x;
      switch (modality) {
        case Modality::visual: {
          VideoAsset one = asset;
          one.frames = {asset.frames[static_cast<std::size_t>(std::llround(t * asset.fps))]};
          one.waveform.clear();
          if (v > 0) one = detail::random_view(one, rng, true, false);
          x = baseline_visual_encode(one.frames.front());
          break;
        }
        case Modality::audio: {
          auto w = truncate(asset, t, 1.0);
          if (v > 0) w = detail::random_view(w, rng, false, true);
          w.waveform.resize(static_cast<std::size_t>(w.sample_rate), 0.0f);
          x = baseline_audio_encode(w.waveform, w.sample_rate);
          break;
        }
        case Modality::fused: {
          auto w = truncate(asset, t, 1.0);
          if (v > 0) w = detail::random_view(w, rng, true, true);
          w.waveform.resize(static_cast<std::size_t>(w.sample_rate), 0.0f);
          const auto a = extract_audio(w, EncoderSpec::audio());
          x = learned_fusion_inputs(w, a).front();
          break;
        }
      }
      data.input_dim = static_cast<int>(x.size());
      data.vectors.push_back(std::move(x));
      data.group_ids.push_back(g);
    }
  }
  return data;
}

}  // namespace vpn
