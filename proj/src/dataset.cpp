#include "dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

#include "image.hpp"
#include "parallel.hpp"

namespace fs = std::filesystem;

namespace stcae {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

[[noreturn]] void csv_fail(const std::string& path, std::size_t lineno, const std::string& what) {
    fail(ErrorKind::data, path + ":" + std::to_string(lineno) + ": " + what);
}

std::vector<std::string> list_frames(const std::string& dir) {
    check(fs::is_directory(dir), ErrorKind::data, "missing video directory: " + dir);
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.rfind("frame_", 0) != 0) continue;
        const auto dot = name.find_last_of('.');
        if (dot == std::string::npos) continue;
        const std::string ext = name.substr(dot);
        if (ext != ".png" && ext != ".pgm") continue;
        names.push_back(name);
    }
    check(!names.empty(), ErrorKind::data, "no frame_*.png|pgm files in " + dir);
    std::sort(names.begin(), names.end());  // zero-padded indices sort temporally
    std::vector<std::string> paths;
    paths.reserve(names.size());
    for (const auto& n : names) paths.push_back(dir + "/" + n);
    return paths;
}

}  // namespace

const VideoManifest* Dataset::find(const std::string& id) const {
    for (const auto& m : manifests) {
        if (m.id == id) return &m;
    }
    return nullptr;
}

const FallAnnotation* Dataset::find_annotation(const std::string& id) const {
    for (const auto& a : annotations) {
        if (a.id == id) return &a;
    }
    return nullptr;
}

Dataset load_manifest(const std::string& root, const DatasetOptions& options) {
    Dataset ds;
    ds.root = root;
    ds.options = options;

    const std::string manifest_path = root + "/manifest.csv";
    std::ifstream mf(manifest_path);
    check(mf.good(), ErrorKind::data, "missing manifest: " + manifest_path);
    std::string line;
    std::size_t lineno = 0;
    check(static_cast<bool>(std::getline(mf, line)), ErrorKind::data,
          manifest_path + ": empty file");
    ++lineno;
    {
        auto header = split_csv_line(line);
        if (header.size() != 3 || header[0] != "id" || header[1] != "role" || header[2] != "fps")
            csv_fail(manifest_path, lineno, "expected header id,role,fps");
    }
    while (std::getline(mf, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 3) csv_fail(manifest_path, lineno, "expected 3 fields");
        VideoManifest m;
        m.id = fields[0];
        if (m.id.empty() || m.id.find('/') != std::string::npos)
            csv_fail(manifest_path, lineno, "bad video id");
        if (fields[1] == "train_adl") m.role = VideoRole::train_adl;
        else if (fields[1] == "test_fall") m.role = VideoRole::test_fall;
        else csv_fail(manifest_path, lineno, "role must be train_adl or test_fall");
        try {
            m.fps = std::stod(fields[2]);
        } catch (...) {
            csv_fail(manifest_path, lineno, "bad fps value");
        }
        if (ds.find(m.id)) csv_fail(manifest_path, lineno, "duplicate video id " + m.id);
        m.frame_paths = list_frames(root + "/videos/" + m.id);
        ds.manifests.push_back(std::move(m));
    }
    check(!ds.manifests.empty(), ErrorKind::data, manifest_path + ": no videos listed");

    const std::string ann_path = root + "/annotations.csv";
    std::ifstream af(ann_path);
    check(af.good(), ErrorKind::data, "missing annotations: " + ann_path);
    lineno = 0;
    check(static_cast<bool>(std::getline(af, line)), ErrorKind::data, ann_path + ": empty file");
    ++lineno;
    {
        auto header = split_csv_line(line);
        if (header.size() != 3 || header[0] != "id" || header[1] != "start" || header[2] != "end")
            csv_fail(ann_path, lineno, "expected header id,start,end");
    }
    std::map<std::string, FallAnnotation> by_id;
    while (std::getline(af, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 3) csv_fail(ann_path, lineno, "expected 3 fields");
        const VideoManifest* m = ds.find(fields[0]);
        if (!m) csv_fail(ann_path, lineno, "unknown video id " + fields[0]);
        int start = 0, end = 0;
        try {
            start = std::stoi(fields[1]);
            end = std::stoi(fields[2]);
        } catch (...) {
            csv_fail(ann_path, lineno, "bad frame index");
        }
        if (start < 1 || end < start) csv_fail(ann_path, lineno, "need 1 <= start <= end");
        if (end > static_cast<int>(m->frame_paths.size()))
            csv_fail(ann_path, lineno,
                     "annotation exceeds video length " + std::to_string(m->frame_paths.size()));
        by_id[fields[0]].id = fields[0];
        by_id[fields[0]].ranges.emplace_back(start, end);
    }
    for (auto& [id, ann] : by_id) {
        std::sort(ann.ranges.begin(), ann.ranges.end());
        for (std::size_t i = 1; i < ann.ranges.size(); ++i) {
            check(ann.ranges[i].first > ann.ranges[i - 1].second, ErrorKind::data,
                  ann_path + ": overlapping fall ranges for video " + id);
        }
        ds.annotations.push_back(std::move(ann));
    }
    return ds;
}

std::vector<std::uint8_t> frame_labels(const FallAnnotation* ann, int frames) {
    std::vector<std::uint8_t> labels(static_cast<std::size_t>(frames), 0);
    if (!ann) return labels;
    for (const auto& [start, end] : ann->ranges) {
        check_contract(start >= 1 && end <= frames, "annotation range outside video");
        for (int j = start; j <= end; ++j) labels[static_cast<std::size_t>(j - 1)] = 1;
    }
    return labels;
}

Tensor load_video(const VideoManifest& manifest, const DatasetOptions& options) {
    const int v = static_cast<int>(manifest.frame_paths.size());
    const int h = options.resize_height, w = options.resize_width;
    Tensor video({v, h, w, 1});
    const std::int64_t frame_elems = static_cast<std::int64_t>(h) * w;
    std::atomic<int> holey{0};
    // Frames decode independently; each writes its own slice.
    parallel_chunks(v, 1, [&](std::int64_t j0, std::int64_t j1) {
        for (std::int64_t j = j0; j < j1; ++j) {
            const Pixmap pm = decode_frame(manifest.frame_paths[static_cast<std::size_t>(j)]);
            if (options.expect_filled && zero_fraction(pm) > 0.05) {
                holey.fetch_add(1, std::memory_order_relaxed);
            }
            const std::vector<float> resized = resize_bilinear(pm, w, h);
            const Tensor frame = normalize_frame(resized, w, h);
            std::memcpy(video.data() + j * frame_elems, frame.data(),
                        sizeof(float) * static_cast<std::size_t>(frame_elems));
        }
    });
    if (holey.load() > 0) {
        warn("video " + manifest.id + ": " + std::to_string(holey.load()) +
             " frame(s) look like unfilled depth (>5% zero pixels)");
    }
    return video;
}

}  // namespace stcae
