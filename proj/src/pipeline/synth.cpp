#include "cxr/pipeline/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "cxr/errors.hpp"
#include "cxr/eval/report.hpp"
#include "cxr/imaging/pgm.hpp"
#include "cxr/parallel.hpp"
#include "cxr/rng.hpp"

namespace cxr::pipeline {

namespace fs = std::filesystem;
using imaging::BitMask;
using imaging::GrayImage;

Finding finding_for_class(std::size_t class_idx) {
  switch (class_idx) {
    case 0: return Finding::peripheral_haze;
    case 1: return Finding::clean;
    case 2: return Finding::consolidation;
    default: throw ArgumentError("synthetic data has three classes");
  }
}

double wire_probability(std::size_t class_idx, double confound_rate) {
  return class_idx == 0 ? confound_rate : 0.1 * confound_rate;
}

namespace {

struct Ellipse {
  double cx, cy, ax, ay;
  /// Squared normalized radius of a point.
  double rho2(double x, double y) const {
    const double u = (x - cx) / ax, v = (y - cy) / ay;
    return u * u + v * v;
  }
};

struct Blob {
  double x, y, r, gain;
  bool plateau;
  double at(double px, double py) const {
    const double d2 = ((px - x) * (px - x) + (py - y) * (py - y)) / (r * r);
    if (plateau) return gain * std::clamp(1.5 * (1.0 - d2), 0.0, 1.0);
    return gain * std::exp(-2.0 * d2);
  }
};

}  // namespace

SynthSample synth_sample(Finding finding, std::size_t extent, double wire_p, std::uint64_t seed) {
  if (extent < 32) throw ArgumentError("synthetic extent must be at least 32");
  Rng rng(seed);
  const double e = static_cast<double>(extent);
  const auto jitter = [&](double span) { return rng.uniform(-span, span); };

  const Ellipse lungs[2] = {
      {e * (0.31 + jitter(0.01)), e * (0.50 + jitter(0.02)), e * (0.13 + jitter(0.01)), e * (0.30 + jitter(0.02))},
      {e * (0.69 + jitter(0.01)), e * (0.50 + jitter(0.02)), e * (0.13 + jitter(0.01)), e * (0.30 + jitter(0.02))},
  };

  std::vector<Blob> blobs;
  if (finding == Finding::consolidation) {
    const auto n = 1 + rng.below(3);
    for (std::uint64_t b = 0; b < n; ++b) {
      const Ellipse& l = lungs[rng.below(2)];
      const double t = rng.uniform(0.0, 2.0 * std::numbers::pi), rad = std::sqrt(rng.uniform()) * 0.6;
      blobs.push_back({l.cx + rad * l.ax * std::cos(t), l.cy + rad * l.ay * std::sin(t), e * rng.uniform(0.07, 0.11),
                       rng.uniform(65.0, 85.0), true});
    }
  } else if (finding == Finding::peripheral_haze) {
    const auto n = 3 + rng.below(3);
    for (std::uint64_t b = 0; b < n; ++b) {
      const std::size_t side = b < 2 ? b : rng.below(2);
      const Ellipse& l = lungs[side];
      // Lateral arc: pointing away from the midline.
      const double centre = side == 0 ? std::numbers::pi : 0.0;
      const double t = centre + rng.uniform(-1.0, 1.0), rad = rng.uniform(0.6, 0.85);
      blobs.push_back({l.cx + rad * l.ax * std::cos(t), l.cy + rad * l.ay * std::sin(t), e * rng.uniform(0.06, 0.09),
                       rng.uniform(40.0, 50.0), false});
    }
  }

  SynthSample s{GrayImage(extent, extent), BitMask(extent, extent), false};
  const double rib_period = e / 8.0;
  for (std::size_t y = 0; y < extent; ++y) {
    for (std::size_t x = 0; x < extent; ++x) {
      const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
      const double noise = rng.normal(0.0, 6.0);
      const bool in_lung = lungs[0].rho2(px, py) <= 1.0 || lungs[1].rho2(px, py) <= 1.0;
      double v;
      if (in_lung) {
        s.mask.set(x, y, true);
        v = 105.0 + 8.0 * std::sin(2.0 * std::numbers::pi * py / rib_period) + noise;
        for (const auto& b : blobs) v += b.at(px, py);
        v = std::clamp(v, 0.0, 255.0);
      } else {
        // Brighter mediastinum in the middle, darker towards the sides.
        const double centre = 1.0 - std::abs(2.0 * px / e - 1.0);
        v = 30.0 + 25.0 * centre * centre + noise;
        v = std::clamp(v, 0.0, static_cast<double>(kBackgroundCeiling));
      }
      s.image.at(x, y) = imaging::round_to_pixel(v);
    }
  }

  if (rng.bernoulli(wire_p)) {
    s.wire = true;
    const auto points = 3 + rng.below(2);
    double x0 = rng.uniform(0.0, e), y0 = rng.uniform(0.0, 0.2 * e);
    const auto level = static_cast<std::uint8_t>(230 + rng.below(26));
    bool drawn = false;
    for (std::uint64_t p = 1; p < points; ++p) {
      const double x1 = rng.uniform(0.0, e), y1 = std::min(e - 0.5, y0 + rng.uniform(0.15, 0.4) * e);
      const double len = std::hypot(x1 - x0, y1 - y0);
      const auto steps = static_cast<std::size_t>(std::ceil(len * 4.0)) + 1;
      for (std::size_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(steps);
        const auto xi = static_cast<std::size_t>(std::clamp(x0 + t * (x1 - x0), 0.0, e - 1.0));
        const auto yi = static_cast<std::size_t>(std::clamp(y0 + t * (y1 - y0), 0.0, e - 1.0));
        if (s.mask.at(xi, yi)) continue;
        s.image.at(xi, yi) = level;
        drawn = true;
      }
      x0 = x1;
      y0 = y1;
    }
    s.wire = drawn;
  }
  return s;
}

DatasetManifest synth_generate(const SynthParams& params, const fs::path& out_dir) {
  if (params.counts.size() != kSynthClasses.size()) throw ArgumentError("synthetic counts need one value per class");
  if (params.extent < 32) throw ArgumentError("synthetic extent must be at least 32");
  if (params.confound_rate < 0.0 || params.confound_rate > 1.0) throw ArgumentError("confound_rate must lie in [0, 1]");

  DatasetManifest m;
  m.class_names = kSynthClasses;
  m.base_dir = out_dir;
  std::vector<std::size_t> cls;
  for (std::size_t c = 0; c < params.counts.size(); ++c) {
    for (std::size_t i = 0; i < params.counts[c]; ++i) {
      char id[64];
      std::snprintf(id, sizeof id, "%s_%04zu", eval::file_stem(kSynthClasses[c]).c_str(), i);
      m.entries.push_back({id, "images/" + std::string(id) + ".pgm", kSynthClasses[c],
                           "synth-" + std::to_string(m.entries.size()), "masks/" + std::string(id) + ".pgm"});
      cls.push_back(c);
    }
  }
  if (m.entries.empty()) throw ArgumentError("synthetic counts are all zero");
  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "masks");
  parallel_for(m.entries.size(), [&](std::size_t i) {
    const auto s = synth_sample(finding_for_class(cls[i]), params.extent, wire_probability(cls[i], params.confound_rate),
                                derive_seed(params.seed, i));
    imaging::write_pgm(m.resolve(m.entries[i].path), s.image);
    imaging::write_pgm(m.resolve(m.entries[i].mask), s.mask.to_image());
  });
  save_manifest(out_dir / "manifest.json", m);
  return m;
}

}  // namespace cxr::pipeline
