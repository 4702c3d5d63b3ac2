#pragma once

#include <cstdint>
#include <string>

namespace stcae {

// Synthetic desk-scale dataset: a bright upright blob walking at per-video
// speeds (ADL), and test videos where the blob abruptly collapses sideways
// to the floor and stays down. Written in the standard dataset layout with
// PGM frames; fully determined by the seed.
struct SynthParams {
    int adl_videos = 5;
    int adl_frames = 40;
    int fall_videos = 3;
    int fall_frames = 48;
    int size = 64;
};

void synth_generate(const std::string& root, std::uint64_t seed, const SynthParams& params = {});

}  // namespace stcae
