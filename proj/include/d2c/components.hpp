#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace d2c {

// Axis-aligned box, y grows downward.
struct BBox {
  double x = 0, y = 0, w = 0, h = 0;

  double area() const { return w * h; }
  double cx() const { return x + w / 2; }
  double cy() const { return y + h / 2; }
  bool valid() const { return w > 0 && h > 0; }

  bool operator==(const BBox&) const = default;
};

using Rgb = std::array<double, 3>;

enum class ComponentKind { text, visual };

const char* to_string(ComponentKind kind);

struct Component {
  int id = 0;
  ComponentKind kind = ComponentKind::visual;
  BBox bbox;
  std::optional<std::string> text;
  std::optional<Rgb> color;
  std::optional<std::vector<double>> features;

  bool is_text() const { return kind == ComponentKind::text; }

  bool operator==(const Component&) const = default;
};

// Row-major sRGB image, channels in [0, 1].
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, Rgb fill = {1.0, 1.0, 1.0});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  Rgb& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  const Rgb& at(int x, int y) const {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<const Rgb> pixels() const { return pixels_; }
  std::span<Rgb> pixels() { return pixels_; }

  bool operator==(const Raster&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb> pixels_;
};

struct PageSize {
  int width = 0;
  int height = 0;
};

struct Annotations {
  PageSize page;
  std::vector<Component> components;
};

/// Intersection over union of two continuous rectangles.
/// Throws Error(invalid_geometry) for boxes with non-positive extent.
double iou(const BBox& a, const BBox& b);

double intersection_area(const BBox& a, const BBox& b);

/// Blackens every pixel whose center falls inside one of the boxes.
/// Boxes extending past the image are clipped.
Raster mask_text_regions(const Raster& img, std::span<const BBox> text_boxes);

/// Combines OCR text components with segmentation components. A visual
/// component whose IoU with any text component reaches dup_threshold is a
/// duplicate of that text and is dropped. Ids are renumbered 0..n-1,
/// text first.
std::vector<Component> merge_components(std::span<const Component> text_components,
                                        std::span<const Component> visual_components,
                                        double dup_threshold = 0.8);

inline constexpr std::size_t kFeatureDim = 10;

/// Deterministic 10-d fallback feature vector:
/// [cx/W, cy/H, w/W, h/H, is_text, is_visual, r, g, b, ln(1 + len(text))].
std::vector<double> featurize(const Component& c, double page_w, double page_h);

/// Externally supplied features win over the fallback.
std::vector<double> node_features(const Component& c, double page_w, double page_h);

// Checks kind/text consistency, box validity and id uniqueness.
void validate_components(std::span<const Component> components);

// Component annotation JSON.
nlohmann::json to_json(const Component& c);
Component component_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Annotations& a);
Annotations annotations_from_json(const nlohmann::json& j);

Annotations load_annotations(const std::string& path);
void save_annotations(const Annotations& a, const std::string& path);

// Raster I/O. Format is chosen from the extension (.ppm or .png).
void write_ppm(const Raster& img, const std::string& path);
Raster read_ppm(const std::string& path);
void write_png(const Raster& img, const std::string& path);
Raster read_png(const std::string& path);
void write_raster(const Raster& img, const std::string& path);
Raster read_raster(const std::string& path);

}  // namespace d2c
