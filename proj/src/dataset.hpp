#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace stcae {

// On-disk layout under a dataset root:
//   manifest.csv          header "id,role,fps"; role in {train_adl, test_fall}
//   annotations.csv       header "id,start,end"; 1-based inclusive fall ranges
//   videos/<id>/frame_NNNNNN.png|.pgm   frames in temporal order

enum class VideoRole { train_adl, test_fall };

struct VideoManifest {
    std::string id;
    VideoRole role = VideoRole::train_adl;
    double fps = 0.0;  // informational
    std::vector<std::string> frame_paths;
};

struct FallAnnotation {
    std::string id;
    std::vector<std::pair<int, int>> ranges;  // 1-based inclusive, sorted, non-overlapping
};

struct DatasetOptions {
    bool expect_filled = false;  // warn when a frame looks like unfilled depth (>5% zero pixels)
    int resize_width = 64;
    int resize_height = 64;
};

struct Dataset {
    std::string root;
    DatasetOptions options;
    std::vector<VideoManifest> manifests;
    std::vector<FallAnnotation> annotations;

    const VideoManifest* find(const std::string& id) const;
    const FallAnnotation* find_annotation(const std::string& id) const;
};

Dataset load_manifest(const std::string& root, const DatasetOptions& options = {});

// Frame label vector (1 = fall) for a video; empty annotation means all zero.
std::vector<std::uint8_t> frame_labels(const FallAnnotation* ann, int frames);

// Decode + resize + normalize every frame: (V, H, W, 1) in [-1, 1].
Tensor load_video(const VideoManifest& manifest, const DatasetOptions& options);

}  // namespace stcae
