#pragma once

// Independent reference implementations used by the unit tests and the
// acceptance runner. Deliberately naive: they share no code with src/.

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "d2c/components.hpp"
#include "d2c/error.hpp"
#include "d2c/pagegraph.hpp"
#include "d2c/rng.hpp"

namespace oracle {

// Counts cells of a grid with spacing 1/res whose centers fall in the box.
inline double grid_area(const d2c::BBox& b, double x0, double y0, double x1, double y1, int res,
                        const d2c::BBox* other = nullptr) {
  long count = 0;
  const double step = 1.0 / res;
  for (double y = y0 + step / 2; y < y1; y += step) {
    for (double x = x0 + step / 2; x < x1; x += step) {
      bool in = x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.h;
      if (other) in = in && x >= other->x && x < other->x + other->w && y >= other->y &&
                      y < other->y + other->h;
      if (in) ++count;
    }
  }
  return static_cast<double>(count) * step * step;
}

// IoU by counting grid cells. Exact for boxes aligned to the grid.
inline double pixel_iou(const d2c::BBox& a, const d2c::BBox& b, int res = 4) {
  const double x0 = std::min(a.x, b.x), y0 = std::min(a.y, b.y);
  const double x1 = std::max(a.x + a.w, b.x + b.w), y1 = std::max(a.y + a.h, b.y + b.h);
  const double inter = grid_area(a, x0, y0, x1, y1, res, &b);
  const double uni = grid_area(a, x0, y0, x1, y1, res) + grid_area(b, x0, y0, x1, y1, res) - inter;
  return inter / uni;
}

// Continuous IoU written out coordinate by coordinate.
inline double exact_iou(const d2c::BBox& a, const d2c::BBox& b) {
  double ix = 0, iy = 0;
  const double l = a.x > b.x ? a.x : b.x;
  const double r = a.x + a.w < b.x + b.w ? a.x + a.w : b.x + b.w;
  const double t = a.y > b.y ? a.y : b.y;
  const double btm = a.y + a.h < b.y + b.h ? a.y + a.h : b.y + b.h;
  if (r > l) ix = r - l;
  if (btm > t) iy = btm - t;
  const double inter = ix * iy;
  return inter / (a.w * a.h + b.w * b.h - inter);
}

// Random component set on a small integer grid so overlaps and exact
// duplicates are common.
inline std::vector<d2c::Component> random_components(d2c::Rng& rng, int n) {
  std::vector<d2c::Component> out;
  std::vector<d2c::BBox> pool;
  for (int i = 0; i < n; ++i) {
    d2c::Component c;
    c.id = i * 3 + 1;
    const bool text = rng.uniform() < 0.5;
    c.kind = text ? d2c::ComponentKind::text : d2c::ComponentKind::visual;
    if (text) c.text = "t" + std::to_string(i);
    if (!pool.empty() && rng.uniform() < 0.3) {
      c.bbox = pool[static_cast<std::size_t>(rng.range(0, static_cast<long>(pool.size()) - 1))];
      if (rng.uniform() < 0.5) c.bbox.w += static_cast<double>(rng.range(0, 1));
    } else {
      c.bbox = {static_cast<double>(rng.range(0, 20)), static_cast<double>(rng.range(0, 20)),
                static_cast<double>(rng.range(1, 10)), static_cast<double>(rng.range(1, 10))};
    }
    pool.push_back(c.bbox);
    out.push_back(c);
  }
  return out;
}

struct EdgeRec {
  int id_a, id_b;
  std::string kind;
  bool operator<(const EdgeRec& o) const {
    return std::tie(id_a, id_b, kind) < std::tie(o.id_a, o.id_b, o.kind);
  }
  bool operator==(const EdgeRec& o) const {
    return id_a == o.id_a && id_b == o.id_b && kind == o.kind;
  }
};

// Double loop over all unordered pairs applying the three edge rules.
inline std::set<EdgeRec> brute_force_edges(const std::vector<d2c::Component>& cs,
                                           double threshold = 0.8) {
  std::set<EdgeRec> out;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    for (std::size_t j = 0; j < cs.size(); ++j) {
      if (cs[i].id >= cs[j].id) continue;
      const bool ti = cs[i].kind == d2c::ComponentKind::text;
      const bool tj = cs[j].kind == d2c::ComponentKind::text;
      std::string kind;
      if (ti && tj) {
        kind = "text-text";
      } else if (exact_iou(cs[i].bbox, cs[j].bbox) > threshold) {
        kind = (!ti && !tj) ? "visual-visual" : "text-visual";
      } else {
        continue;
      }
      out.insert({cs[i].id, cs[j].id, kind});
    }
  }
  return out;
}

inline std::set<EdgeRec> graph_edges(const d2c::PageGraph& g) {
  std::set<EdgeRec> out;
  for (const d2c::Edge& e : g.edges()) {
    int a = g.nodes()[e.i].id, b = g.nodes()[e.j].id;
    if (a > b) std::swap(a, b);
    out.insert({a, b, d2c::to_string(e.kind)});
  }
  return out;
}

// Levenshtein by the full DP table.
inline std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
  return d[a.size()][b.size()];
}

template <class Fn>
bool throws_kind(d2c::ErrorKind kind, Fn&& fn) {
  try {
    fn();
  } catch (const d2c::Error& e) {
    return e.kind() == kind;
  }
  return false;
}

}  // namespace oracle
