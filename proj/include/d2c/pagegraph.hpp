#pragma once

#include <span>
#include <string>
#include <vector>

#include "d2c/components.hpp"
#include "json.hpp"

namespace d2c {

enum class EdgeKind { text_text, visual_visual, text_visual };

const char* to_string(EdgeKind kind);

struct Edge {
  std::size_t i = 0;  // node index, i < j
  std::size_t j = 0;
  EdgeKind kind = EdgeKind::text_text;
  double weight = 1.0;

  bool operator==(const Edge&) const = default;
};

enum class EdgeWeighting { unit, iou };

struct GraphOptions {
  double iou_threshold = 0.8;  // overlap edges need iou > threshold
  EdgeWeighting weighting = EdgeWeighting::unit;
};

// Dense symmetric matrix, row-major.
struct SquareMatrix {
  std::size_t n = 0;
  std::vector<double> data;

  double operator()(std::size_t r, std::size_t c) const { return data[r * n + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * n + c]; }
};

class PageGraph {
 public:
  PageGraph() = default;
  PageGraph(std::vector<Component> nodes, std::vector<Edge> edges);

  const std::vector<Component>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const SquareMatrix& adjacency() const { return adjacency_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<Component> nodes_;
  std::vector<Edge> edges_;  // sorted by (i, j)
  SquareMatrix adjacency_;
};

/// Multimodal page graph:
///   - every text/text pair is connected,
///   - visual/visual and text/visual pairs are connected when IoU exceeds
///     the threshold (strictly).
/// No self-edges are stored.
PageGraph build_graph(std::span<const Component> components, const GraphOptions& options = {});

/// D^-1/2 (A + I) D^-1/2 with D the row sums of A + I.
SquareMatrix normalized_adjacency(const PageGraph& g);

std::string graph_to_dot(const PageGraph& g);

nlohmann::json graph_to_json(const PageGraph& g);

}  // namespace d2c
