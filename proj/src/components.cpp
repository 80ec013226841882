#include "d2c/components.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include <png.h>

#include "d2c/error.hpp"

namespace d2c {

const char* to_string(ComponentKind kind) {
  return kind == ComponentKind::text ? "text" : "visual";
}

Raster::Raster(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) {
    throw Error(ErrorKind::invalid_input, "raster dimensions must be non-negative");
  }
  pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

namespace {

void require_valid(const BBox& b) {
  if (!(b.w > 0) || !(b.h > 0) || !std::isfinite(b.x) || !std::isfinite(b.y) ||
      !std::isfinite(b.w) || !std::isfinite(b.h)) {
    throw Error(ErrorKind::invalid_geometry, "degenerate bounding box");
  }
}

}  // namespace

double intersection_area(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (iw <= 0 || ih <= 0) return 0.0;
  return iw * ih;
}

double iou(const BBox& a, const BBox& b) {
  require_valid(a);
  require_valid(b);
  const double inter = intersection_area(a, b);
  if (inter == 0.0) return 0.0;
  if (a == b) return 1.0;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

Raster mask_text_regions(const Raster& img, std::span<const BBox> text_boxes) {
  if (img.empty()) throw Error(ErrorKind::invalid_input, "cannot mask an empty image");
  Raster out = img;
  for (const BBox& b : text_boxes) {
    // Pixel (px, py) is covered iff b.x <= px + 0.5 < b.x + b.w (same for y).
    const int x0 = std::max(0, static_cast<int>(std::ceil(b.x - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(b.y - 0.5)));
    const int x1 = std::min(img.width(), static_cast<int>(std::ceil(b.x + b.w - 0.5)));
    const int y1 = std::min(img.height(), static_cast<int>(std::ceil(b.y + b.h - 0.5)));
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) out.at(x, y) = {0.0, 0.0, 0.0};
  }
  return out;
}

void validate_components(std::span<const Component> components) {
  std::set<int> ids;
  for (const Component& c : components) {
    if (!ids.insert(c.id).second) {
      throw Error(ErrorKind::invalid_input, "duplicate component id " + std::to_string(c.id));
    }
    require_valid(c.bbox);
    if (c.is_text() && !c.text) {
      throw Error(ErrorKind::invalid_input,
                  "text component " + std::to_string(c.id) + " has no text");
    }
    if (!c.is_text() && c.text) {
      throw Error(ErrorKind::invalid_input,
                  "visual component " + std::to_string(c.id) + " carries text");
    }
  }
}

std::vector<Component> merge_components(std::span<const Component> text_components,
                                        std::span<const Component> visual_components,
                                        double dup_threshold) {
  if (!(dup_threshold > 0.0 && dup_threshold <= 1.0)) {
    throw Error(ErrorKind::invalid_input, "dup_threshold must lie in (0, 1]");
  }
  validate_components(text_components);
  validate_components(visual_components);

  std::vector<Component> merged;
  merged.reserve(text_components.size() + visual_components.size());
  for (const Component& t : text_components) merged.push_back(t);
  for (const Component& v : visual_components) {
    const bool duplicate = std::any_of(
        text_components.begin(), text_components.end(),
        [&](const Component& t) { return iou(t.bbox, v.bbox) >= dup_threshold; });
    if (!duplicate) merged.push_back(v);
  }
  for (std::size_t i = 0; i < merged.size(); ++i) merged[i].id = static_cast<int>(i);
  return merged;
}

std::vector<double> featurize(const Component& c, double page_w, double page_h) {
  if (!(page_w > 0) || !(page_h > 0)) {
    throw Error(ErrorKind::invalid_input, "page dimensions must be positive");
  }
  // Clip to the page so every entry stays inside [0, 1].
  const double x0 = std::clamp(c.bbox.x, 0.0, page_w);
  const double y0 = std::clamp(c.bbox.y, 0.0, page_h);
  const double x1 = std::clamp(c.bbox.x + c.bbox.w, 0.0, page_w);
  const double y1 = std::clamp(c.bbox.y + c.bbox.h, 0.0, page_h);
  const Rgb color = c.color.value_or(Rgb{0.0, 0.0, 0.0});
  const double len = c.text ? static_cast<double>(c.text->size()) : 0.0;
  return {
      (x0 + x1) / 2 / page_w,
      (y0 + y1) / 2 / page_h,
      (x1 - x0) / page_w,
      (y1 - y0) / page_h,
      c.is_text() ? 1.0 : 0.0,
      c.is_text() ? 0.0 : 1.0,
      color[0],
      color[1],
      color[2],
      std::log1p(len),
  };
}

std::vector<double> node_features(const Component& c, double page_w, double page_h) {
  if (c.features) return *c.features;
  return featurize(c, page_w, page_h);
}

// --- JSON -----------------------------------------------------------------

nlohmann::json to_json(const Component& c) {
  nlohmann::json j;
  j["id"] = c.id;
  j["kind"] = to_string(c.kind);
  j["bbox"] = {c.bbox.x, c.bbox.y, c.bbox.w, c.bbox.h};
  if (c.text) j["text"] = *c.text;
  if (c.color) j["color"] = {(*c.color)[0], (*c.color)[1], (*c.color)[2]};
  if (c.features) j["features"] = *c.features;
  return j;
}

Component component_from_json(const nlohmann::json& j) {
  try {
    Component c;
    c.id = j.at("id").get<int>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "text") {
      c.kind = ComponentKind::text;
    } else if (kind == "visual") {
      c.kind = ComponentKind::visual;
    } else {
      throw Error(ErrorKind::invalid_input, "unknown component kind '" + kind + "'");
    }
    const auto& bb = j.at("bbox");
    if (!bb.is_array() || bb.size() != 4) {
      throw Error(ErrorKind::invalid_input, "bbox must be [x, y, w, h]");
    }
    c.bbox = {bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(),
              bb[3].get<double>()};
    if (j.contains("text") && !j["text"].is_null()) c.text = j["text"].get<std::string>();
    if (c.is_text() && !c.text) c.text = std::string{};
    if (j.contains("color") && !j["color"].is_null()) {
      const auto& col = j["color"];
      if (!col.is_array() || col.size() != 3) {
        throw Error(ErrorKind::invalid_input, "color must be [r, g, b]");
      }
      c.color = Rgb{col[0].get<double>(), col[1].get<double>(), col[2].get<double>()};
    }
    if (j.contains("features") && !j["features"].is_null()) {
      c.features = j["features"].get<std::vector<double>>();
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::invalid_input, std::string("component: ") + e.what());
  }
}

nlohmann::json to_json(const Annotations& a) {
  nlohmann::json j;
  j["page"] = {{"width", a.page.width}, {"height", a.page.height}};
  j["components"] = nlohmann::json::array();
  for (const Component& c : a.components) j["components"].push_back(to_json(c));
  return j;
}

Annotations annotations_from_json(const nlohmann::json& j) {
  Annotations a;
  if (j.is_null()) return a;
  try {
    if (j.contains("page")) {
      a.page.width = j["page"].value("width", 0);
      a.page.height = j["page"].value("height", 0);
    }
    if (j.contains("components")) {
      for (const auto& cj : j.at("components")) a.components.push_back(component_from_json(cj));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::invalid_input, std::string("annotations: ") + e.what());
  }
  validate_components(a.components);
  return a;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Annotations load_annotations(const std::string& path) {
  const std::string text = read_file(path);
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return {};
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(ErrorKind::parse, "malformed annotation JSON in '" + path + "'", e.byte);
  }
  return annotations_from_json(j);
}

void save_annotations(const Annotations& a, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
  out << to_json(a).dump(2) << '\n';
  if (!out) throw Error(ErrorKind::io, "write failed for '" + path + "'");
}

// --- Raster I/O -------------------------------------------------------------

namespace {

unsigned char quantize(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(),
                    [](char a, char b) { return std::tolower(a) == std::tolower(b); });
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_ppm(const Raster& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
  out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  for (const Rgb& p : img.pixels()) {
    const char bytes[3] = {static_cast<char>(quantize(p[0])), static_cast<char>(quantize(p[1])),
                           static_cast<char>(quantize(p[2]))};
    out.write(bytes, 3);
  }
  if (!out) throw Error(ErrorKind::io, "write failed for '" + path + "'");
}

Raster read_ppm(const std::string& path) {
  const std::string data = read_file(path);
  std::istringstream in(data);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic;
  auto skip_comments = [&] {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string line;
      std::getline(in, line);
      in >> std::ws;
    }
  };
  skip_comments();
  in >> w;
  skip_comments();
  in >> h;
  skip_comments();
  in >> maxval;
  if (magic != "P6" || !in || w <= 0 || h <= 0 || maxval != 255) {
    throw Error(ErrorKind::invalid_input, "'" + path + "' is not an 8-bit P6 image");
  }
  in.get();
  const auto offset = static_cast<std::size_t>(in.tellg());
  const std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (data.size() < offset + need) {
    throw Error(ErrorKind::invalid_input, "'" + path + "' is truncated");
  }
  Raster img(w, h);
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data() + offset);
  std::size_t k = 0;
  for (Rgb& p : img.pixels()) {
    for (double& c : p) c = bytes[k++] / 255.0;
  }
  return img;
}

void write_png(const Raster& img, const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error(ErrorKind::io, "cannot write '" + path + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::io, "libpng initialisation failed");
  }
  std::vector<unsigned char> row(static_cast<std::size_t>(img.width()) * 3);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::io, "PNG encoding failed for '" + path + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width(), img.height(), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const Rgb& p = img.at(x, y);
      for (int c = 0; c < 3; ++c) row[static_cast<std::size_t>(x) * 3 + c] = quantize(p[c]);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Raster read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::io, "libpng initialisation failed");
  }
  Raster img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::invalid_input, "'" + path + "' is not a readable PNG");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  img = Raster(w, h);
  std::vector<unsigned char> row(png_get_rowbytes(png, info));
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y)[c] = row[static_cast<std::size_t>(x) * 3 + c] / 255.0;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_raster(const Raster& img, const std::string& path) {
  if (ends_with(path, ".png")) return write_png(img, path);
  if (ends_with(path, ".ppm")) return write_ppm(img, path);
  throw Error(ErrorKind::invalid_input, "unsupported image extension: '" + path + "'");
}

Raster read_raster(const std::string& path) {
  if (ends_with(path, ".png")) return read_png(path);
  if (ends_with(path, ".ppm")) return read_ppm(path);
  throw Error(ErrorKind::invalid_input, "unsupported image extension: '" + path + "'");
}

}  // namespace d2c
