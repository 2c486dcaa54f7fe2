#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace wg::geometry {

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

enum class DomainKind { ChannelWithObstacle, DiscWithStubs, ExternalMesh };

struct StubSpec {
  double width = 1.0;
  double length = 1.0;   // distance from the chord to the port
  double attach_angle = 0.0;
};

struct DomainSpec {
  DomainKind kind = DomainKind::ChannelWithObstacle;
  double channel_width = 2.0;
  double channel_length = 8.0;
  double obstacle_radius = 0.0;
  double obstacle_offset = 0.0;  // vertical displacement of the obstacle centre
  double disc_radius = 2.0;
  std::vector<StubSpec> stubs;
  int refinement = 30;           // boundary points per unit length
  std::optional<std::string> mesh_path;

  void validate() const;         // throws InvalidGeometry / ConfigError
  double analytic_area() const;  // closed form for the generated families
  int num_ports() const;
  std::vector<double> port_widths() const;
};

struct BoundaryEdge {
  int a = 0, b = 0;  // port edges are directed along increasing arc parameter
  int tag = 0;       // 0 = wall, k >= 1 = port k
};

struct Port {
  std::vector<int> chain;  // ordered vertex indices, start to end
  double width = 0.0;      // total chain length
};

struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<Port> ports;  // derived from tagged edges by finalize_ports()

  double area() const;
  double min_angle_deg() const;
  int num_interior_holes() const;  // from the Euler relation's combinatorics
  // Rebuilds `ports` from the tagged boundary edges. Throws InvariantViolation
  // if a port chain is not a single straight, consistently directed segment.
  void finalize_ports();
  // Structural invariants: conforming edges, orientation, straight ports,
  // minimum angle. Edge-length bounds are checked when refinement n is given.
  void validate(int refinement_n = 0) const;
  // Arc-length positions along port k matching Port::chain (0 .. width).
  std::vector<double> port_arclength(int port) const;

  std::string fingerprint() const;  // content hash of the exchange-format text
};

// Generates a conforming triangulation for the parametric families
// (ChannelWithObstacle, DiscWithStubs) or loads kind == ExternalMesh.
Mesh build_domain(const DomainSpec& spec);

// ASCII exchange format "wgmesh 1".
Mesh read_mesh(const std::string& path);
void write_mesh(const Mesh& mesh, const std::string& path);
std::string mesh_to_string(const Mesh& mesh);
Mesh mesh_from_string(const std::string& text);

}  // namespace wg::geometry
