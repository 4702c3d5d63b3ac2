#include "synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "common.hpp"
#include "image.hpp"
#include "rng.hpp"

namespace fs = std::filesystem;

namespace stcae {

namespace {

struct Blob {
    double cx, cy;
    double sigma_x, sigma_y;
    double amplitude;
};

Pixmap render(int size, const Blob& blob, Rng& noise_rng) {
    Pixmap p;
    p.width = size;
    p.height = size;
    p.pixels.resize(static_cast<std::size_t>(size) * size);
    const double floor_top = size * 0.78;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double v = 18.0;
            if (y >= static_cast<int>(floor_top)) v = 58.0;  // static floor band
            const double dx = (x - blob.cx) / blob.sigma_x;
            const double dy = (y - blob.cy) / blob.sigma_y;
            v += blob.amplitude * std::exp(-0.5 * (dx * dx + dy * dy));
            v += noise_rng.uniform(-2.0f, 2.0f);
            const long q = std::lround(v);
            p.pixels[static_cast<std::size_t>(y) * size + x] =
                static_cast<std::uint8_t>(q < 0 ? 0 : (q > 255 ? 255 : q));
        }
    }
    return p;
}

struct Walker {
    double x, dir, speed, bob_amp, bob_freq, phase;
    double lo, hi;

    void step() {
        x += dir * speed;
        if (x < lo) {
            x = lo + (lo - x);
            dir = 1.0;
        } else if (x > hi) {
            x = hi - (x - hi);
            dir = -1.0;
        }
    }
};

Walker make_walker(int size, Rng& rng) {
    Walker w;
    w.lo = size * 0.18;
    w.hi = size * 0.82;
    w.x = rng.uniform(static_cast<float>(w.lo), static_cast<float>(w.hi));
    w.dir = rng.next_float() < 0.5f ? -1.0 : 1.0;
    w.speed = rng.uniform(0.9f, 2.3f);
    w.bob_amp = rng.uniform(0.4f, 1.2f);
    w.bob_freq = rng.uniform(0.25f, 0.45f);
    w.phase = rng.uniform(0.0f, 6.28f);
    return w;
}

double smoothstep(double u) { return u * u * (3.0 - 2.0 * u); }

void write_video(const std::string& root, const std::string& id, const std::vector<Pixmap>& frames) {
    const std::string dir = root + "/videos/" + id;
    fs::create_directories(dir);
    char name[32];
    for (std::size_t j = 0; j < frames.size(); ++j) {
        std::snprintf(name, sizeof name, "/frame_%06zu.pgm", j + 1);
        write_pgm(dir + name, frames[j]);
    }
}

}  // namespace

void synth_generate(const std::string& root, std::uint64_t seed, const SynthParams& params) {
    check_contract(params.adl_videos >= 1 && params.fall_videos >= 1, "need at least one video per role");
    check_contract(params.adl_frames >= 8 && params.fall_frames >= 16, "videos too short");
    fs::create_directories(root + "/videos");

    const int size = params.size;
    const double stand_cy = size * 0.60;
    const double lie_cy = size * 0.74;
    const double stand_sx = size * 0.052, stand_sy = size * 0.135;
    const double lie_sx = size * 0.150, lie_sy = size * 0.050;

    std::string manifest = "id,role,fps\n";
    std::string annotations = "id,start,end\n";
    char idbuf[32];

    for (int v = 0; v < params.adl_videos; ++v) {
        std::snprintf(idbuf, sizeof idbuf, "adl_%02d", v + 1);
        Rng rng(Rng::mix(seed, 0xAD1'0000ULL + static_cast<std::uint64_t>(v)));
        Walker walker = make_walker(size, rng);
        const double amp = rng.uniform(205.0f, 225.0f);
        std::vector<Pixmap> frames;
        frames.reserve(static_cast<std::size_t>(params.adl_frames));
        for (int t = 0; t < params.adl_frames; ++t) {
            Blob b{walker.x, stand_cy + walker.bob_amp * std::sin(walker.bob_freq * t + walker.phase),
                   stand_sx, stand_sy, amp};
            frames.push_back(render(size, b, rng));
            walker.step();
        }
        write_video(root, idbuf, frames);
        manifest += std::string(idbuf) + ",train_adl,30\n";
    }

    for (int v = 0; v < params.fall_videos; ++v) {
        std::snprintf(idbuf, sizeof idbuf, "fall_%02d", v + 1);
        Rng rng(Rng::mix(seed, 0xFA11'0000ULL + static_cast<std::uint64_t>(v)));
        Walker walker = make_walker(size, rng);
        const double amp = rng.uniform(205.0f, 225.0f);
        const int collapse_len = 5;
        int walk_frames = static_cast<int>(params.fall_frames * 0.35);
        if (walk_frames < 10) walk_frames = 10;
        const double fall_x = walker.lo + (walker.hi - walker.lo) * rng.next_float();

        std::vector<Pixmap> frames;
        frames.reserve(static_cast<std::size_t>(params.fall_frames));
        for (int t = 0; t < params.fall_frames; ++t) {
            Blob b;
            b.amplitude = amp;
            if (t < walk_frames) {
                b.cx = walker.x;
                b.cy = stand_cy + walker.bob_amp * std::sin(walker.bob_freq * t + walker.phase);
                b.sigma_x = stand_sx;
                b.sigma_y = stand_sy;
                walker.step();
            } else {
                const int ft = t - walk_frames;
                const double u = ft >= collapse_len ? 1.0
                                                    : smoothstep((ft + 1.0) / collapse_len);
                b.cx = walker.x + (fall_x - walker.x) * 0.0;  // falls in place
                b.cy = stand_cy + (lie_cy - stand_cy) * u;
                b.sigma_x = stand_sx + (lie_sx - stand_sx) * u;
                b.sigma_y = stand_sy + (lie_sy - stand_sy) * u;
            }
            frames.push_back(render(size, b, rng));
        }
        write_video(root, idbuf, frames);
        manifest += std::string(idbuf) + ",test_fall,30\n";
        annotations += std::string(idbuf) + "," + std::to_string(walk_frames + 1) + "," +
                       std::to_string(params.fall_frames) + "\n";
    }

    std::FILE* mf = std::fopen((root + "/manifest.csv").c_str(), "wb");
    check(mf != nullptr, ErrorKind::io, "cannot write manifest.csv under " + root);
    std::fwrite(manifest.data(), 1, manifest.size(), mf);
    std::fclose(mf);
    std::FILE* af = std::fopen((root + "/annotations.csv").c_str(), "wb");
    check(af != nullptr, ErrorKind::io, "cannot write annotations.csv under " + root);
    std::fwrite(annotations.data(), 1, annotations.size(), af);
    std::fclose(af);
}

}  // namespace stcae
