#include "d2c/pagegraph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "d2c/error.hpp"

namespace d2c {

const char* to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::text_text: return "text-text";
    case EdgeKind::visual_visual: return "visual-visual";
    case EdgeKind::text_visual: return "text-visual";
  }
  return "unknown";
}

PageGraph::PageGraph(std::vector<Component> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  const std::size_t n = nodes_.size();
  adjacency_.n = n;
  adjacency_.data.assign(n * n, 0.0);
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  for (const Edge& e : edges_) {
    if (e.i >= e.j || e.j >= n) {
      throw Error(ErrorKind::invalid_input, "edge endpoints must satisfy i < j < n");
    }
    if (!(e.weight > 0)) throw Error(ErrorKind::invalid_input, "edge weight must be positive");
    adjacency_(e.i, e.j) = e.weight;
    adjacency_(e.j, e.i) = e.weight;
  }
}

PageGraph build_graph(std::span<const Component> components, const GraphOptions& options) {
  if (!(options.iou_threshold > 0.0 && options.iou_threshold <= 1.0)) {
    throw Error(ErrorKind::invalid_input, "iou_threshold must lie in (0, 1]");
  }
  validate_components(components);

  std::vector<Edge> edges;
  const std::size_t n = components.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Component& a = components[i];
      const Component& b = components[j];
      if (a.is_text() && b.is_text()) {
        edges.push_back({i, j, EdgeKind::text_text, 1.0});
        continue;
      }
      const double overlap = iou(a.bbox, b.bbox);
      if (overlap > options.iou_threshold) {
        const EdgeKind kind =
            (a.is_text() || b.is_text()) ? EdgeKind::text_visual : EdgeKind::visual_visual;
        const double w = options.weighting == EdgeWeighting::iou ? overlap : 1.0;
        edges.push_back({i, j, kind, w});
      }
    }
  }
  return PageGraph({components.begin(), components.end()}, std::move(edges));
}

SquareMatrix normalized_adjacency(const PageGraph& g) {
  const SquareMatrix& a = g.adjacency();
  const std::size_t n = a.n;
  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 1.0;  // self-loop
    for (std::size_t j = 0; j < n; ++j) deg += a(i, j);
    inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
  }
  SquareMatrix out{n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double aij = a(i, j) + (i == j ? 1.0 : 0.0);
      if (aij != 0.0) out(i, j) = inv_sqrt_deg[i] * aij * inv_sqrt_deg[j];
    }
  }
  return out;
}

std::string graph_to_dot(const PageGraph& g) {
  // statements ordered by component id, not by input position
  std::vector<const Component*> nodes;
  for (const Component& c : g.nodes()) nodes.push_back(&c);
  std::sort(nodes.begin(), nodes.end(), [](auto* a, auto* b) { return a->id < b->id; });
  std::vector<std::tuple<int, int, EdgeKind>> edges;
  for (const Edge& e : g.edges()) {
    const int a = g.nodes()[e.i].id, b = g.nodes()[e.j].id;
    edges.emplace_back(std::min(a, b), std::max(a, b), e.kind);
  }
  std::sort(edges.begin(), edges.end());

  std::ostringstream out;
  out << "graph page {\n";
  for (const Component* c : nodes) {
    out << "  n" << c->id << " [shape=" << (c->is_text() ? "box" : "ellipse") << ", label=\""
        << to_string(c->kind) << ' ' << c->id << "\"];\n";
  }
  for (const auto& [a, b, kind] : edges) {
    out << "  n" << a << " -- n" << b << " [label=\"" << to_string(kind) << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

nlohmann::json graph_to_json(const PageGraph& g) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const Component& c : g.nodes()) {
    j["nodes"].push_back({{"id", c.id},
                          {"kind", to_string(c.kind)},
                          {"bbox", {c.bbox.x, c.bbox.y, c.bbox.w, c.bbox.h}}});
  }
  j["edges"] = nlohmann::json::array();
  for (const Edge& e : g.edges()) {
    j["edges"].push_back({g.nodes()[e.i].id, g.nodes()[e.j].id, to_string(e.kind), e.weight});
  }
  return j;
}

}  // namespace d2c
