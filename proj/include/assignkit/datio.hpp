// Copyright 2026 The assignkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "assignkit/anchors.hpp"
#include "assignkit/cost.hpp"
#include "assignkit/error.hpp"
#include "assignkit/geometry.hpp"

namespace assignkit {

/// One image: its size and ground-truth objects in corner form.
struct Scene {
  std::int64_t image_id = 0;
  int width = 0;
  int height = 0;
  std::vector<GroundTruth> gts;

  ImageSize size() const {
    return {static_cast<double>(width), static_cast<double>(height)};
  }
};

/// Dense [0, C) class indices for sparse COCO category ids.
class CategoryMap {
 public:
  CategoryMap() = default;

  void Add(std::int64_t coco_id, std::string name) {
    if (to_dense_.count(coco_id)) return;
    to_dense_[coco_id] = -1;
    pending_.push_back({coco_id, std::move(name)});
    Rebuild();
  }

  std::size_t size() const { return coco_ids_.size(); }
  bool contains(std::int64_t coco_id) const { return to_dense_.count(coco_id) > 0; }

  int Dense(std::int64_t coco_id) const {
    auto it = to_dense_.find(coco_id);
    if (it == to_dense_.end()) {
      throw SchemaError("unknown category id " + std::to_string(coco_id));
    }
    return it->second;
  }

  std::int64_t CocoId(int dense) const { return coco_ids_.at(static_cast<std::size_t>(dense)); }
  const std::string& Name(int dense) const { return names_.at(static_cast<std::size_t>(dense)); }
  const std::vector<std::int64_t>& coco_ids() const { return coco_ids_; }

 private:
  // Dense indices follow ascending COCO id.
  void Rebuild() {
    std::sort(pending_.begin(), pending_.end());
    coco_ids_.clear();
    names_.clear();
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      coco_ids_.push_back(pending_[i].first);
      names_.push_back(pending_[i].second);
      to_dense_[pending_[i].first] = static_cast<int>(i);
    }
  }

  std::vector<std::pair<std::int64_t, std::string>> pending_;
  std::vector<std::int64_t> coco_ids_;
  std::vector<std::string> names_;
  std::map<std::int64_t, int> to_dense_;
};

struct CocoDataset {
  std::vector<Scene> scenes;  // ascending image_id
  CategoryMap categories;
  std::size_t dropped_boxes = 0;  // zero area after clipping
};

/// One record of a COCO results file.
struct CocoResult {
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  Box box;
  double score = 0.0;
};

namespace detail {

using Json = nlohmann::json;

inline std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed for " + path);
}

inline Json ParseJson(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const std::size_t line =
        1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
    const std::size_t last_nl = text.rfind('\n', byte == 0 ? 0 : byte - 1);
    const std::size_t column = last_nl == std::string::npos ? byte + 1 : byte - last_nl;
    throw ParseError(source + ":" + std::to_string(line) + ":" +
                     std::to_string(column) + ": " + e.what());
  }
}

inline const Json& Field(const Json& obj, const char* name, const std::string& where) {
  if (!obj.is_object()) throw SchemaError(where + ": expected an object");
  auto it = obj.find(name);
  if (it == obj.end()) {
    throw SchemaError(where + ": missing field '" + name + "'");
  }
  return *it;
}

inline std::int64_t IntField(const Json& obj, const char* name, const std::string& where) {
  const Json& v = Field(obj, name, where);
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d) return static_cast<std::int64_t>(d);
  }
  throw SchemaError(where + ": field '" + name + "' must be an integer");
}

inline double NumberField(const Json& obj, const char* name, const std::string& where) {
  const Json& v = Field(obj, name, where);
  if (!v.is_number()) throw SchemaError(where + ": field '" + name + "' must be a number");
  return v.get<double>();
}

inline const Json& ArrayField(const Json& obj, const char* name, const std::string& where) {
  const Json& v = Field(obj, name, where);
  if (!v.is_array()) throw SchemaError(where + ": field '" + name + "' must be an array");
  return v;
}

// [x, y, w, h] -> corner box. Negative extents are a schema error.
inline Box BboxField(const Json& obj, const std::string& where) {
  const Json& v = ArrayField(obj, "bbox", where);
  if (v.size() != 4) {
    throw SchemaError(where + ": bbox must have 4 numbers, got " + std::to_string(v.size()));
  }
  double xywh[4];
  for (std::size_t i = 0; i < 4; ++i) {
    if (!v[i].is_number()) throw SchemaError(where + ": bbox entries must be numbers");
    xywh[i] = v[i].get<double>();
  }
  const Box b{xywh[0], xywh[1], xywh[0] + xywh[2], xywh[1] + xywh[3]};
  if (!b.valid()) throw SchemaError(where + ": invalid bbox " + b.ToString());
  return b;
}

inline Json XYWH(const Box& b) {
  return Json::array({b.x1, b.y1, b.width(), b.height()});
}

}  // namespace detail

/// Parses COCO annotation JSON text. Boxes are converted to corner form and
/// clipped to the image; those left with zero area are dropped and counted.
/// Category ids are remapped densely in ascending id order.
inline CocoDataset ParseCocoAnnotations(const std::string& text,
                                        const std::string& source = "<memory>") {
  using detail::Json;
  const Json root = detail::ParseJson(text, source);
  if (!root.is_object()) throw SchemaError(source + ": top level must be an object");

  CocoDataset ds;
  std::map<std::int64_t, std::size_t> scene_of;
  const Json& images = detail::ArrayField(root, "images", source);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string where = "images[" + std::to_string(i) + "]";
    Scene s;
    s.image_id = detail::IntField(images[i], "id", where);
    s.width = static_cast<int>(detail::IntField(images[i], "width", where));
    s.height = static_cast<int>(detail::IntField(images[i], "height", where));
    if (s.width <= 0 || s.height <= 0) {
      throw SchemaError(where + ": image size must be positive");
    }
    if (scene_of.count(s.image_id)) {
      throw SchemaError(where + ": duplicate image id " + std::to_string(s.image_id));
    }
    scene_of[s.image_id] = 0;
    ds.scenes.push_back(std::move(s));
  }
  std::sort(ds.scenes.begin(), ds.scenes.end(),
            [](const Scene& a, const Scene& b) { return a.image_id < b.image_id; });
  for (std::size_t i = 0; i < ds.scenes.size(); ++i) scene_of[ds.scenes[i].image_id] = i;

  const bool has_categories = root.contains("categories");
  if (has_categories) {
    const Json& cats = detail::ArrayField(root, "categories", source);
    for (std::size_t i = 0; i < cats.size(); ++i) {
      const std::string where = "categories[" + std::to_string(i) + "]";
      const std::int64_t id = detail::IntField(cats[i], "id", where);
      std::string name;
      if (cats[i].contains("name") && cats[i]["name"].is_string()) {
        name = cats[i]["name"].get<std::string>();
      }
      ds.categories.Add(id, name);
    }
  }

  const Json& anns = detail::ArrayField(root, "annotations", source);
  struct Pending {
    std::size_t scene;
    Box box;
    std::int64_t category;
    bool crowd;
  };
  std::vector<Pending> pending;
  pending.reserve(anns.size());
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const std::string where = "annotations[" + std::to_string(i) + "]";
    const Json& a = anns[i];
    const std::int64_t image_id = detail::IntField(a, "image_id", where);
    auto it = scene_of.find(image_id);
    if (it == scene_of.end()) {
      throw SchemaError(where + ": unknown image_id " + std::to_string(image_id));
    }
    const std::int64_t category = detail::IntField(a, "category_id", where);
    if (has_categories && !ds.categories.contains(category)) {
      throw SchemaError(where + ": unknown category_id " + std::to_string(category));
    }
    if (!has_categories) ds.categories.Add(category, std::to_string(category));
    bool crowd = false;
    if (a.contains("iscrowd")) crowd = detail::IntField(a, "iscrowd", where) != 0;
    pending.push_back({it->second, detail::BboxField(a, where), category, crowd});
  }

  for (const Pending& p : pending) {
    Scene& s = ds.scenes[p.scene];
    const Box clipped = p.box.Clipped(s.width, s.height);
    if (clipped.area() <= 0.0) {
      ++ds.dropped_boxes;
      continue;
    }
    s.gts.push_back({clipped, ds.categories.Dense(p.category), p.crowd});
  }
  return ds;
}

inline CocoDataset LoadCocoAnnotations(const std::string& path) {
  return ParseCocoAnnotations(detail::ReadFile(path), path);
}

/// Serializes back to COCO annotation JSON (annotation ids are 1-based
/// positions). Loading the output reproduces the dataset.
inline std::string ToCocoJson(const CocoDataset& ds) {
  using detail::Json;
  Json root;
  root["images"] = Json::array();
  root["annotations"] = Json::array();
  root["categories"] = Json::array();
  std::int64_t ann_id = 1;
  for (const Scene& s : ds.scenes) {
    root["images"].push_back({{"id", s.image_id}, {"width", s.width}, {"height", s.height}});
    for (const GroundTruth& g : s.gts) {
      root["annotations"].push_back({{"id", ann_id++},
                                     {"image_id", s.image_id},
                                     {"category_id", ds.categories.CocoId(g.class_id)},
                                     {"bbox", detail::XYWH(g.box)},
                                     {"area", g.box.area()},
                                     {"iscrowd", g.is_crowd ? 1 : 0}});
    }
  }
  for (std::size_t c = 0; c < ds.categories.size(); ++c) {
    root["categories"].push_back({{"id", ds.categories.CocoId(static_cast<int>(c))},
                                  {"name", ds.categories.Name(static_cast<int>(c))}});
  }
  return root.dump();
}

inline std::vector<CocoResult> ParseResults(const std::string& text,
                                            const std::string& source = "<memory>") {
  using detail::Json;
  const Json root = detail::ParseJson(text, source);
  if (!root.is_array()) throw SchemaError(source + ": results file must be a JSON array");
  std::vector<CocoResult> out;
  out.reserve(root.size());
  for (std::size_t i = 0; i < root.size(); ++i) {
    const std::string where = source + "[" + std::to_string(i) + "]";
    CocoResult r;
    r.image_id = detail::IntField(root[i], "image_id", where);
    r.category_id = detail::IntField(root[i], "category_id", where);
    r.box = detail::BboxField(root[i], where);
    r.score = detail::NumberField(root[i], "score", where);
    out.push_back(r);
  }
  return out;
}

inline std::vector<CocoResult> LoadResults(const std::string& path) {
  return ParseResults(detail::ReadFile(path), path);
}

inline std::string ToResultsJson(const std::vector<CocoResult>& results) {
  using detail::Json;
  Json root = Json::array();
  for (const CocoResult& r : results) {
    root.push_back({{"image_id", r.image_id},
                    {"category_id", r.category_id},
                    {"bbox", detail::XYWH(r.box)},
                    {"score", r.score}});
  }
  return root.dump();
}

inline void WriteResults(const std::string& path, const std::vector<CocoResult>& results) {
  detail::WriteFile(path, ToResultsJson(results));
}

using PredictionMap = std::map<std::int64_t, std::vector<Prediction>>;

/// Groups result records per image. Each record becomes a prediction whose
/// score sits at the record's dense class index, zero elsewhere.
inline PredictionMap ToPredictions(const std::vector<CocoResult>& results,
                                   const CategoryMap& categories) {
  PredictionMap out;
  for (const CocoResult& r : results) {
    Prediction p;
    p.box = r.box;
    p.scores.assign(categories.size(), 0.0);
    p.scores[static_cast<std::size_t>(categories.Dense(r.category_id))] = r.score;
    out[r.image_id].push_back(std::move(p));
  }
  return out;
}

inline PredictionMap LoadPredictions(const std::string& path, const CategoryMap& categories) {
  return ToPredictions(LoadResults(path), categories);
}

/// Controls how far synthetic predictions stray from the ground truth.
struct JitterSpec {
  double center_sigma = 0.1;  // fraction of box size
  double scale_sigma = 0.1;   // std of log width / log height
  int dup_count = 1;          // copies per ground truth
  double fp_rate = 0.0;       // false positives per ground truth (Poisson mean)
  double score_noise = 0.0;   // std of additive score noise

  void Validate() const {
    if (!(center_sigma >= 0.0) || !(scale_sigma >= 0.0) || !(score_noise >= 0.0)) {
      throw InvalidArgument("jitter sigmas must be non-negative");
    }
    if (dup_count < 1) throw InvalidArgument("dup_count must be positive");
    if (!(fp_rate >= 0.0 && fp_rate < 1.0)) throw InvalidArgument("fp_rate must lie in [0, 1)");
  }
};

// splitmix64 finalizer; derives independent per-scene seeds.
inline std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace detail {

inline double Gaussian(std::mt19937_64& rng, double sigma) {
  if (sigma <= 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

// Shifts the center by N(0, center_sigma * size) and scales each side by
// exp(N(0, scale_sigma)), then clips to the image.
inline Box JitterBox(const Box& src, const JitterSpec& spec, const ImageSize& image,
                     std::mt19937_64& rng) {
  const double cx = src.cx() + Gaussian(rng, spec.center_sigma * src.width());
  const double cy = src.cy() + Gaussian(rng, spec.center_sigma * src.height());
  const double w = src.width() * std::exp(Gaussian(rng, spec.scale_sigma));
  const double h = src.height() * std::exp(Gaussian(rng, spec.scale_sigma));
  return Box{cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0}.Clipped(
      image.width, image.height);
}

inline double NoisyScore(double base, const JitterSpec& spec, std::mt19937_64& rng) {
  return std::clamp(base + Gaussian(rng, spec.score_noise), 0.0, 1.0);
}

}  // namespace detail

/// Stand-in for a detector: `dup_count` jittered copies of every non-crowd
/// ground truth, each scored by its IoU with the source plus noise, and
/// Poisson(fp_rate * |gts|) uniformly placed false positives.
inline std::vector<Prediction> SynthesizePredictions(const Scene& scene,
                                                     const JitterSpec& spec,
                                                     std::uint64_t seed,
                                                     std::size_t num_classes) {
  spec.Validate();
  if (num_classes == 0) throw InvalidArgument("num_classes must be positive");
  std::mt19937_64 rng(seed);
  const ImageSize image = scene.size();
  std::vector<Prediction> out;
  std::size_t targets = 0;
  for (const GroundTruth& g : scene.gts) {
    if (g.is_crowd) continue;
    ++targets;
    for (int d = 0; d < spec.dup_count; ++d) {
      Prediction p;
      p.box = detail::JitterBox(g.box, spec, image, rng);
      p.scores.assign(num_classes, 0.0);
      p.scores[static_cast<std::size_t>(g.class_id)] =
          detail::NoisyScore(Iou(p.box, g.box), spec, rng);
      out.push_back(std::move(p));
    }
  }
  const double fp_mean = spec.fp_rate * static_cast<double>(targets);
  if (fp_mean > 0.0) {
    const int fps = std::poisson_distribution<int>(fp_mean)(rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int f = 0; f < fps; ++f) {
      const double w = (0.02 + 0.3 * unit(rng)) * image.width;
      const double h = (0.02 + 0.3 * unit(rng)) * image.height;
      const double x = unit(rng) * (image.width - w);
      const double y = unit(rng) * (image.height - h);
      Prediction p;
      p.box = {x, y, x + w, y + h};
      p.scores.assign(num_classes, 0.0);
      const auto cls = static_cast<std::size_t>(unit(rng) * static_cast<double>(num_classes));
      p.scores[std::min(cls, num_classes - 1)] =
          detail::NoisyScore(0.3 * unit(rng), spec, rng);
      out.push_back(std::move(p));
    }
  }
  return out;
}

/// Mimics first-stage outputs over a dense anchor grid: every anchor whose
/// center falls inside a non-crowd ground truth (the smallest one, if
/// several) regresses to a jittered copy of it, scored by IoU; the others
/// keep their initial box with a low score. Larger objects cover more
/// anchor centers and therefore collect more proposals.
inline std::vector<Prediction> SynthesizeDenseProposals(const Scene& scene,
                                                        const std::vector<Anchor>& anchors,
                                                        const JitterSpec& spec,
                                                        std::uint64_t seed,
                                                        std::size_t num_classes) {
  spec.Validate();
  if (num_classes == 0) throw InvalidArgument("num_classes must be positive");
  std::mt19937_64 rng(seed);
  const ImageSize image = scene.size();
  std::vector<Prediction> out;
  out.reserve(anchors.size());
  for (const Anchor& a : anchors) {
    const GroundTruth* owner = nullptr;
    for (const GroundTruth& g : scene.gts) {
      if (g.is_crowd) continue;
      const bool inside = a.center_x >= g.box.x1 && a.center_x < g.box.x2 &&
                          a.center_y >= g.box.y1 && a.center_y < g.box.y2;
      if (inside && (owner == nullptr || g.box.area() < owner->box.area())) owner = &g;
    }
    Prediction p;
    p.scores.assign(num_classes, 0.0);
    if (owner != nullptr) {
      p.box = detail::JitterBox(owner->box, spec, image, rng);
      p.scores[static_cast<std::size_t>(owner->class_id)] =
          detail::NoisyScore(Iou(p.box, owner->box), spec, rng);
    } else {
      p.box = a.box;
      p.scores[0] = detail::NoisyScore(0.05, spec, rng);
    }
    out.push_back(std::move(p));
  }
  return out;
}

/// Random scene with COCO-like object sizes: the square root of the area is
/// log-uniform between 4 px and 80% of the shorter image side, aspect ratio
/// log-uniform in [1/2, 2].
inline Scene RandomScene(std::int64_t image_id, int width, int height, int num_gts,
                         int num_classes, std::uint64_t seed) {
  if (width <= 0 || height <= 0 || num_gts < 0 || num_classes < 1) {
    throw InvalidArgument("RandomScene needs a positive size, gts >= 0 and classes >= 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Scene s{image_id, width, height, {}};
  const double max_side = 0.8 * std::min(width, height);
  const double lo = std::log(4.0);
  const double hi = std::log(std::max(max_side, 5.0));
  for (int k = 0; k < num_gts; ++k) {
    const double side = std::exp(lo + (hi - lo) * unit(rng));
    const double aspect = std::exp(std::log(0.5) + std::log(4.0) * unit(rng));
    const double w = std::min(side * std::sqrt(aspect), static_cast<double>(width));
    const double h = std::min(side / std::sqrt(aspect), static_cast<double>(height));
    const double x = unit(rng) * (width - w);
    const double y = unit(rng) * (height - h);
    const int cls = std::min(num_classes - 1, static_cast<int>(unit(rng) * num_classes));
    s.gts.push_back({Box{x, y, x + w, y + h}, cls, false});
  }
  return s;
}

}  // namespace assignkit
