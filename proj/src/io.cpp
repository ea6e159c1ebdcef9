#include "textseg/io.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "textseg/errors.hpp"

namespace textseg {

ImageTensor load_image(const std::string& path) {
  const cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
  if (bgr.empty()) throw ConfigError("cannot decode image: " + path);
  ImageTensor img(bgr.rows, bgr.cols, 3);
  img.source_path = path;
  for (int r = 0; r < bgr.rows; ++r) {
    const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(r);
    for (int c = 0; c < bgr.cols; ++c) {
      img.at(r, c, 0) = row[c][2] / 255.0;
      img.at(r, c, 1) = row[c][1] / 255.0;
      img.at(r, c, 2) = row[c][0] / 255.0;
    }
  }
  return img;
}

void save_image_png(const std::string& path, const ImageTensor& image) {
  if (image.channels != 3) throw ConfigError("save_image_png: expected 3 channels");
  cv::Mat bgr(image.height, image.width, CV_8UC3);
  for (int r = 0; r < image.height; ++r) {
    cv::Vec3b* row = bgr.ptr<cv::Vec3b>(r);
    for (int c = 0; c < image.width; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        const double v = std::clamp(image.at(r, c, ch), 0.0, 1.0);
        row[c][2 - ch] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
    }
  }
  if (!cv::imwrite(path, bgr)) throw ConfigError("cannot write image: " + path);
}

void save_mask_png(const std::string& path, const BinaryMask& mask) {
  cv::Mat gray(mask.rows(), mask.cols(), CV_8UC1);
  for (int r = 0; r < mask.rows(); ++r)
    for (int c = 0; c < mask.cols(); ++c)
      gray.at<unsigned char>(r, c) = mask(r, c) ? 255 : 0;
  if (!cv::imwrite(path, gray)) throw ConfigError("cannot write mask: " + path);
}

BinaryMask load_mask_png(const std::string& path) {
  const cv::Mat gray = cv::imread(path, cv::IMREAD_GRAYSCALE);
  if (gray.empty()) throw ConfigError("cannot decode mask: " + path);
  BinaryMask mask(gray.rows, gray.cols, 0);
  for (int r = 0; r < gray.rows; ++r)
    for (int c = 0; c < gray.cols; ++c) mask(r, c) = gray.at<unsigned char>(r, c) >= 128;
  return mask;
}

void save_float_map(const std::string& path, const RealMap& values,
                    const nlohmann::json& sidecar) {
  std::ofstream bin(path, std::ios::binary);
  if (!bin) throw ConfigError("cannot write float map: " + path);
  for (double v : values.data()) {
    const float f = static_cast<float>(v);
    static_assert(sizeof(float) == 4);
    char bytes[4];
    std::memcpy(bytes, &f, 4);
    bin.write(bytes, 4);
  }
  nlohmann::json meta = sidecar;
  meta["height"] = values.rows();
  meta["width"] = values.cols();
  std::ofstream side(path + ".json");
  if (!side) throw ConfigError("cannot write sidecar: " + path + ".json");
  side << meta.dump(2) << "\n";
}

RealMap load_float_map(const std::string& path, nlohmann::json* sidecar) {
  std::ifstream side_in(path + ".json");
  if (!side_in) throw ConfigError("missing sidecar: " + path + ".json");
  nlohmann::json meta;
  side_in >> meta;
  const int h = meta.at("height").get<int>();
  const int w = meta.at("width").get<int>();
  RealMap values(h, w);
  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw ConfigError("cannot read float map: " + path);
  for (double& v : values.data()) {
    char bytes[4];
    bin.read(bytes, 4);
    if (!bin) throw ConfigError("float map truncated: " + path);
    float f;
    std::memcpy(&f, bytes, 4);
    v = f;
  }
  if (sidecar) *sidecar = meta;
  return values;
}

void save_saliency(const std::string& path, const SaliencyMap& map) {
  save_float_map(path, map.values,
                 {{"prompt_id", map.prompt_id},
                  {"gamma", map.gamma},
                  {"steps", map.steps},
                  {"seed", map.seed}});
}

SaliencyMap load_saliency(const std::string& path) {
  nlohmann::json meta;
  SaliencyMap map;
  map.values = load_float_map(path, &meta);
  map.prompt_id = meta.value("prompt_id", "");
  map.gamma = meta.value("gamma", 0.0);
  map.steps = meta.value("steps", 0);
  map.seed = meta.value("seed", std::uint64_t{0});
  return map;
}

void save_uncertainty(const std::string& path, const UncertaintyMap& map) {
  save_float_map(path, map.entropy, {{"class_count", map.class_count}});
}

UncertaintyMap load_uncertainty(const std::string& path) {
  nlohmann::json meta;
  UncertaintyMap map;
  map.entropy = load_float_map(path, &meta);
  map.class_count = meta.value("class_count", 2);
  return map;
}

nlohmann::json prompt_set_to_json(const VisualPromptSet& prompts) {
  nlohmann::json boxes = nlohmann::json::array();
  for (const PromptBox& b : prompts.boxes)
    boxes.push_back({b.row_min, b.col_min, b.row_max, b.col_max});
  nlohmann::json points = nlohmann::json::array();
  for (const auto& [r, c] : prompts.points) points.push_back({r, c});
  return {{"boxes", boxes}, {"points", points}, {"mode", to_string(prompts.mode)}};
}

VisualPromptSet prompt_set_from_json(const nlohmann::json& j) {
  VisualPromptSet prompts;
  prompts.mode = prompt_mode_from_string(j.at("mode").get<std::string>());
  for (const auto& b : j.at("boxes"))
    prompts.boxes.push_back({b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(),
                             b.at(3).get<int>()});
  for (const auto& p : j.at("points"))
    prompts.points.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
  return prompts;
}

void save_prompts_json(const std::string& path, const VisualPromptSet& prompts) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write prompts: " + path);
  out << prompt_set_to_json(prompts).dump(2) << "\n";
}

VisualPromptSet load_prompts_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read prompts: " + path);
  nlohmann::json j;
  in >> j;
  return prompt_set_from_json(j);
}

namespace {

void heat_color(double v, double& r, double& g, double& b) {
  v = std::clamp(v, 0.0, 1.0);
  r = std::clamp(1.6 * v - 0.3, 0.0, 1.0);
  g = std::clamp(1.0 - std::abs(2.0 * v - 1.0), 0.0, 1.0);
  b = std::clamp(1.3 - 1.6 * v, 0.0, 1.0);
}

}  // namespace

ImageTensor heat_overlay(const ImageTensor& base, const RealMap& heat) {
  if (base.height != heat.rows() || base.width != heat.cols())
    throw ConfigError("heat_overlay: shape mismatch");
  ImageTensor out(base.height, base.width, 3);
  for (int r = 0; r < base.height; ++r)
    for (int c = 0; c < base.width; ++c) {
      double hr, hg, hb;
      heat_color(heat(r, c), hr, hg, hb);
      const double gray =
          (base.at(r, c, 0) + base.at(r, c, 1) + base.at(r, c, 2)) / 3.0;
      out.at(r, c, 0) = 0.4 * gray + 0.6 * hr;
      out.at(r, c, 1) = 0.4 * gray + 0.6 * hg;
      out.at(r, c, 2) = 0.4 * gray + 0.6 * hb;
    }
  return out;
}

ImageTensor mask_overlay(const ImageTensor& base, const BinaryMask& mask) {
  if (base.height != mask.rows() || base.width != mask.cols())
    throw ConfigError("mask_overlay: shape mismatch");
  ImageTensor out = base;
  for (int r = 0; r < base.height; ++r)
    for (int c = 0; c < base.width; ++c) {
      if (!mask(r, c)) continue;
      out.at(r, c, 0) = 0.5 * base.at(r, c, 0);
      out.at(r, c, 1) = std::min(1.0, 0.5 * base.at(r, c, 1) + 0.5);
      out.at(r, c, 2) = 0.5 * base.at(r, c, 2);
    }
  return out;
}

ImageTensor hstack_panels(const std::vector<ImageTensor>& panels) {
  if (panels.empty()) throw ConfigError("hstack_panels: no panels");
  const int h = panels[0].height;
  int w = 0;
  for (const auto& p : panels) {
    if (p.height != h) throw ConfigError("hstack_panels: height mismatch");
    w += p.width;
  }
  const int sep = 2;
  w += sep * (static_cast<int>(panels.size()) - 1);
  ImageTensor out(h, w, 3, 1.0);
  int offset = 0;
  for (const auto& p : panels) {
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < p.width; ++c)
        for (int ch = 0; ch < 3; ++ch) out.at(r, offset + c, ch) = p.at(r, c, ch);
    offset += p.width + sep;
  }
  return out;
}

}  // namespace textseg
