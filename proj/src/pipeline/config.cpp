#include "cxr/pipeline/config.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "cxr/binary_io.hpp"
#include "cxr/errors.hpp"
#include "cxr/neural/arch.hpp"
#include "cxr/rng.hpp"

namespace cxr::pipeline {

using nlohmann::json;

std::string_view to_string(Enhancement e) {
  switch (e) {
    case Enhancement::none: return "none";
    case Enhancement::he: return "he";
    case Enhancement::clahe: return "clahe";
    case Enhancement::unsharp_gaussian: return "unsharp_gaussian";
    case Enhancement::unsharp_laplacian: return "unsharp_laplacian";
  }
  return "?";
}

Enhancement parse_enhancement(std::string_view name) {
  for (auto e : {Enhancement::none, Enhancement::he, Enhancement::clahe, Enhancement::unsharp_gaussian,
                 Enhancement::unsharp_laplacian})
    if (to_string(e) == name) return e;
  throw ArgumentError("unknown enhancement '" + std::string(name) + "'");
}

std::string_view to_string(SmotePlacement p) { return p == SmotePlacement::before_cv ? "before_cv" : "per_fold"; }

SmotePlacement parse_smote_placement(std::string_view name) {
  if (name == "before_cv") return SmotePlacement::before_cv;
  if (name == "per_fold") return SmotePlacement::per_fold;
  throw ArgumentError("unknown SMOTE placement '" + std::string(name) + "' (expected before_cv or per_fold)");
}

bool operator==(const PipelineConfig& a, const PipelineConfig& b) { return config_to_json(a) == config_to_json(b); }

std::uint64_t stage_seed(const PipelineConfig& cfg, SeedStream stream) {
  return derive_seed(cfg.seed, static_cast<std::uint64_t>(stream));
}

json stage_seeds(const PipelineConfig& cfg) {
  return {{"split", stage_seed(cfg, SeedStream::split)},
          {"segmenter_subset", stage_seed(cfg, SeedStream::segmenter_subset)},
          {"segmenter_init", stage_seed(cfg, SeedStream::segmenter_init)},
          {"segmenter_shuffle", stage_seed(cfg, SeedStream::segmenter_shuffle)},
          {"encoder_init", stage_seed(cfg, SeedStream::encoder_init)},
          {"encoder_shuffle", stage_seed(cfg, SeedStream::encoder_shuffle)},
          {"smote", stage_seed(cfg, SeedStream::smote)},
          {"folds", stage_seed(cfg, SeedStream::folds)},
          {"svm", stage_seed(cfg, SeedStream::svm)}};
}

namespace {

/// Reads one JSON object, remembering which keys were consumed so the rest
/// can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path, std::vector<std::string>& problems)
      : j_(j), path_(std::move(path)), problems_(problems) {
    if (!j_.is_object()) problems_.push_back(path_ + ": expected an object");
  }
  ~Section() {
    if (!j_.is_object()) return;
    for (const auto& [key, _] : j_.items())
      if (!used_.count(key)) problems_.push_back(path_ + "." + key + ": unknown key");
  }

  const json* find(const std::string& key) {
    used_.insert(key);
    if (!j_.is_object() || !j_.contains(key)) return nullptr;
    return &j_[key];
  }

  template <class T>
  void read(const std::string& key, T& out) {
    const json* v = find(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0)) throw std::invalid_argument("nonnegative integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v->is_number()) throw std::invalid_argument("number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw std::invalid_argument("boolean");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) throw std::invalid_argument("string");
      }
      out = v->get<T>();
    } catch (const std::exception& e) {
      problems_.push_back(path_ + "." + key + ": expected " + e.what());
    }
  }

  template <class Enum, class Parse>
  void read_enum(const std::string& key, Enum& out, Parse parse) {
    std::string name;
    const json* v = find(key);
    if (!v) return;
    if (!v->is_string()) {
      problems_.push_back(path_ + "." + key + ": expected string");
      return;
    }
    try {
      out = parse(v->get<std::string>());
    } catch (const ArgumentError& e) {
      problems_.push_back(path_ + "." + key + ": " + e.what());
    }
  }

  void check(bool ok, const std::string& key, const std::string& what) {
    if (!ok) problems_.push_back(path_ + "." + key + ": " + what);
  }

  const std::string& path() const { return path_; }
  std::vector<std::string>& problems() { return problems_; }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>& problems_;
  std::set<std::string> used_;
};

const json kEmpty = json::object();

const json& child(Section& s, const std::string& key) {
  const json* v = s.find(key);
  return v ? *v : kEmpty;
}

void read_train(Section& s, neural::TrainConfig& t) {
  s.read("batch_size", t.batch_size);
  s.read("epochs", t.epochs);
  s.read("learning_rate", t.learning_rate);
  s.read("momentum", t.momentum);
  s.check(t.batch_size >= 1, "batch_size", "must be at least 1");
  s.check(t.learning_rate > 0, "learning_rate", "must be positive");
  s.check(t.momentum >= 0 && t.momentum < 1, "momentum", "must lie in [0, 1)");
}

json train_json(const neural::TrainConfig& t) {
  return {{"batch_size", t.batch_size}, {"epochs", t.epochs}, {"learning_rate", t.learning_rate}, {"momentum", t.momentum}};
}

}  // namespace

PipelineConfig config_from_json(const json& j) {
  PipelineConfig cfg;
  std::vector<std::string> problems;
  {
    Section top(j, "config", problems);
    int version = kConfigVersion;
    top.read("version", version);
    top.check(version == kConfigVersion, "version", "unsupported version " + std::to_string(version));
    top.read("seed", cfg.seed);
    {
      Section s(child(top, "split"), "config.split", problems);
      s.read("train", cfg.split.train);
      s.read("val", cfg.split.val);
      s.read("test", cfg.split.test);
      s.check(cfg.split.train > 0 && cfg.split.val >= 0 && cfg.split.test >= 0 &&
                  std::abs(cfg.split.train + cfg.split.val + cfg.split.test - 1.0) <= 1e-9,
              "train", "fractions must be nonnegative, train positive, and sum to 1");
    }
    {
      auto& p = cfg.preprocess;
      Section s(child(top, "preprocess"), "config.preprocess", problems);
      s.read("extent", p.extent);
      s.read("median_radius", p.median_radius);
      s.read_enum("enhancement", p.enhancement, parse_enhancement);
      s.check(p.extent >= 8, "extent", "must be at least 8");
      {
        Section c(child(s, "clahe"), "config.preprocess.clahe", problems);
        c.read("tiles_x", p.clahe.tiles_x);
        c.read("tiles_y", p.clahe.tiles_y);
        if (const json* v = c.find("clip_limit")) {
          if (v->is_null())
            p.clahe.clip_limit = std::numeric_limits<double>::infinity();
          else if (v->is_number())
            p.clahe.clip_limit = v->get<double>();
          else
            c.check(false, "clip_limit", "expected number or null");
        }
        c.check(p.clahe.tiles_x >= 1 && p.clahe.tiles_y >= 1, "tiles_x", "tile counts must be at least 1");
        c.check(p.clahe.clip_limit > 0, "clip_limit", "must be positive");
      }
      {
        Section u(child(s, "unsharp"), "config.preprocess.unsharp", problems);
        u.read("sigma", p.unsharp_sigma);
        u.read("amount", p.unsharp_amount);
        u.check(p.unsharp_sigma > 0, "sigma", "must be positive");
      }
    }
    {
      auto& g = cfg.segmentation;
      Section s(child(top, "segmentation"), "config.segmentation", problems);
      s.read("enabled", g.enabled);
      s.read_enum("source", g.source, [](std::string_view n) {
        if (n == "unet") return MaskSource::unet;
        if (n == "manifest") return MaskSource::manifest;
        throw ArgumentError("unknown mask source '" + std::string(n) + "' (expected unet or manifest)");
      });
      s.read("depth", g.depth);
      s.read("base_channels", g.base_channels);
      s.read("train_images", g.train_images);
      read_train(s, g.train);
      s.check(g.depth >= 1, "depth", "must be at least 1");
      s.check(g.base_channels >= 1, "base_channels", "must be at least 1");
      s.check(g.train_images >= 1, "train_images", "must be at least 1");
    }
    {
      auto& e = cfg.encoder;
      Section s(child(top, "encoder"), "config.encoder", problems);
      s.read("profile", e.profile);
      try {
        neural::profile(e.profile);
      } catch (const ArgumentError& err) {
        s.check(false, "profile", err.what());
      }
      read_train(s, e.train);
      if (const json* w = s.find("class_weights")) {
        if (!w->is_object()) {
          s.check(false, "class_weights", "expected an object of class name to weight");
        } else {
          e.class_weights.clear();
          for (const auto& [name, v] : w->items()) {
            if (!v.is_number() || v.get<double>() <= 0)
              s.check(false, "class_weights." + name, "expected a positive number");
            else
              e.class_weights[name] = v.get<double>();
          }
        }
      }
    }
    {
      auto& m = cfg.smote;
      Section s(child(top, "smote"), "config.smote", problems);
      s.read("target", m.target);
      s.read("k", m.k);
      s.read_enum("placement", m.placement, parse_smote_placement);
      s.check(m.k >= 1, "k", "must be at least 1");
    }
    {
      auto& v = cfg.svm;
      Section s(child(top, "svm"), "config.svm", problems);
      s.read("C", v.C);
      s.read("gamma", v.gamma);
      s.read("tol", v.tol);
      s.read("max_passes", v.max_passes);
      s.check(v.C > 0, "C", "must be positive");
      s.check(v.gamma >= 0, "gamma", "must be nonnegative (0 selects the scale heuristic)");
      s.check(v.tol > 0, "tol", "must be positive");
    }
    {
      Section s(child(top, "cv"), "config.cv", problems);
      s.read("k", cfg.cv.k);
      s.read_enum("mode", cfg.cv.mode, eval::parse_fold_mode);
      s.check(cfg.cv.k >= 2, "k", "must be at least 2");
    }
  }
  if (!problems.empty()) throw ValidationError("invalid pipeline config", problems);
  return cfg;
}

json config_to_json(const PipelineConfig& cfg) {
  const auto& p = cfg.preprocess;
  const auto& g = cfg.segmentation;
  json seg = train_json(g.train);
  seg.update({{"enabled", g.enabled},
              {"source", g.source == MaskSource::unet ? "unet" : "manifest"},
              {"depth", g.depth},
              {"base_channels", g.base_channels},
              {"train_images", g.train_images}});
  json enc = train_json(cfg.encoder.train);
  enc["profile"] = cfg.encoder.profile;
  enc["class_weights"] = cfg.encoder.class_weights;
  const json clip = std::isinf(p.clahe.clip_limit) ? json(nullptr) : json(p.clahe.clip_limit);
  return {{"version", kConfigVersion},
          {"seed", cfg.seed},
          {"split", {{"train", cfg.split.train}, {"val", cfg.split.val}, {"test", cfg.split.test}}},
          {"preprocess",
           {{"extent", p.extent},
            {"median_radius", p.median_radius},
            {"enhancement", to_string(p.enhancement)},
            {"clahe", {{"tiles_x", p.clahe.tiles_x}, {"tiles_y", p.clahe.tiles_y}, {"clip_limit", clip}}},
            {"unsharp", {{"sigma", p.unsharp_sigma}, {"amount", p.unsharp_amount}}}}},
          {"segmentation", seg},
          {"encoder", enc},
          {"smote", {{"target", cfg.smote.target}, {"k", cfg.smote.k}, {"placement", to_string(cfg.smote.placement)}}},
          {"svm", {{"C", cfg.svm.C}, {"gamma", cfg.svm.gamma}, {"tol", cfg.svm.tol}, {"max_passes", cfg.svm.max_passes}}},
          {"cv", {{"k", cfg.cv.k}, {"mode", eval::to_string(cfg.cv.mode)}}}};
}

PipelineConfig load_config(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return config_from_json(json::parse(bytes.begin(), bytes.end()));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what(), e.byte);
  }
}

std::vector<double> class_weight_vector(const EncoderConfig& enc, const std::vector<std::string>& class_names) {
  std::vector<double> out;
  std::vector<std::string> missing;
  for (const auto& name : class_names) {
    const auto it = enc.class_weights.find(name);
    if (it == enc.class_weights.end())
      missing.push_back(name);
    else
      out.push_back(it->second);
  }
  if (!missing.empty()) throw ValidationError("encoder class_weights lack an entry for some classes", missing);
  return out;
}

}  // namespace cxr::pipeline
