#pragma once

// Incremental Bowyer-Watson Delaunay triangulation with constrained-boundary
// recovery by midpoint insertion and Ruppert-style quality refinement.
// Backs geometry::build_domain; not part of the public engine surface.

#include <cstdint>
#include <vector>

#include "wg/geometry.hpp"

namespace wg::geometry::detail {

struct Segment {
  int a = 0, b = 0;
  int tag = 0;
  int curve = 0;    // id of the originating boundary curve
  double t0 = 0.0;  // parameter interval on that curve (for port ordering)
  double t1 = 1.0;
};

struct TriangulateInput {
  std::vector<Vec2> points;       // boundary points first, then interior seeds
  int num_boundary_points = 0;
  std::vector<Segment> segments;  // boundary subsegments (conforming constraints)
  std::vector<Vec2> hole_seeds;
  double min_angle_deg = 20.0;
  double min_boundary_edge = 0.0;  // refuse to split a segment below this length
  int smoothing_rounds = 2;
};

struct TriangulateResult {
  std::vector<Vec2> points;
  std::vector<std::array<int, 3>> triangles;  // kept (inside) triangles, CCW
  std::vector<Segment> segments;              // after splits; conforming edges
};

TriangulateResult triangulate(const TriangulateInput& input);

}  // namespace wg::geometry::detail
