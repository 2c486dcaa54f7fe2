#include "wg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "wg/delaunay.hpp"
#include "wg/errors.hpp"
#include "wg/numeric.hpp"

namespace wg::geometry {

namespace {

constexpr double kPi = std::numbers::pi;

int pieces_for(double len, int n) {
  // floor keeps edge lengths in [1/n, 2/n] and makes doubling n at least
  // double the subdivision count
  int p = static_cast<int>(std::floor(len * n + 1e-9));
  return std::max(1, p);
}

double chord_angle(double w, double r) { return 2.0 * std::asin(w / (2.0 * r)); }

double segment_area(double w, double r) {
  double th = chord_angle(w, r);
  return 0.5 * r * r * (th - std::sin(th));
}

// radius for a regular N-gon whose area equals the disc of radius R
double equal_area_radius(double R, int N) {
  return R * std::sqrt((2.0 * kPi / N) / std::sin(2.0 * kPi / N));
}

struct BoundaryBuilder {
  std::vector<Vec2> pts;
  std::vector<detail::Segment> segs;
  int next_curve = 0;
  int loop_start = -1;
  int cur = -1;

  int add(Vec2 p) {
    pts.push_back(p);
    return static_cast<int>(pts.size()) - 1;
  }
  void begin_loop(Vec2 p) { loop_start = cur = add(p); }

  // straight polyline cur -> target in `pieces` steps; target = -1 makes a new
  // endpoint, otherwise connects to an existing point (loop closure).
  // reverse_param orients the stored parameter against the traversal direction
  // (used for ports whose chain runs opposite to the loop).
  void line_to(Vec2 q, int pieces, int tag, int target = -1, bool reverse_param = false) {
    int curve = next_curve++;
    Vec2 p = pts[cur];
    int prev = cur;
    for (int i = 1; i <= pieces; ++i) {
      int idx;
      if (i == pieces)
        idx = target >= 0 ? target : add(q);
      else
        idx = add(p + (double(i) / pieces) * (q - p));
      double t0 = double(i - 1) / pieces, t1 = double(i) / pieces;
      if (reverse_param)
        segs.push_back({idx, prev, tag, curve, 1.0 - t1, 1.0 - t0});
      else
        segs.push_back({prev, idx, tag, curve, t0, t1});
      prev = idx;
    }
    cur = prev;
  }

  // circular arc (CCW) from cur at angle a0 to angle a1; intermediate vertices
  // on radius rho, endpoint either existing (target) or new at radius rho.
  void arc_to(Vec2 center, double rho, double a0, double a1, int pieces, int tag,
              int target = -1) {
    int curve = next_curve++;
    int prev = cur;
    for (int i = 1; i <= pieces; ++i) {
      double a = a0 + (a1 - a0) * double(i) / pieces;
      int idx;
      if (i == pieces && target >= 0)
        idx = target;
      else
        idx = add({center.x + rho * std::cos(a), center.y + rho * std::sin(a)});
      segs.push_back({prev, idx, tag, curve, double(i - 1) / pieces, double(i) / pieces});
      prev = idx;
    }
    cur = prev;
  }
};

void add_obstacle(BoundaryBuilder& b, std::vector<Vec2>& seeds, Vec2 center, double R, int n) {
  int N = std::max(8, pieces_for(2.0 * kPi * R, n));
  double rho = equal_area_radius(R, N);
  int first = b.add({center.x + rho, center.y});
  b.cur = first;
  int curve = b.next_curve++;
  int prev = first;
  for (int i = 1; i <= N; ++i) {
    double a = 2.0 * kPi * i / N;
    int idx = i == N ? first : b.add({center.x + rho * std::cos(a), center.y + rho * std::sin(a)});
    b.segs.push_back({prev, idx, 0, curve, double(i - 1) / N, double(i) / N});
    prev = idx;
  }
  seeds.push_back(center);
}

struct SegGrid {
  double cell = 1.0;
  Vec2 lo;
  int nx = 1, ny = 1;
  std::vector<std::vector<int>> buckets;

  SegGrid(const std::vector<Vec2>& pts, const std::vector<detail::Segment>& segs) {
    Vec2 hi{-1e300, -1e300};
    lo = {1e300, 1e300};
    double maxlen = 1e-12;
    for (const auto& s : segs) {
      maxlen = std::max(maxlen, norm(pts[s.b] - pts[s.a]));
      for (int v : {s.a, s.b}) {
        lo.x = std::min(lo.x, pts[v].x);
        lo.y = std::min(lo.y, pts[v].y);
        hi.x = std::max(hi.x, pts[v].x);
        hi.y = std::max(hi.y, pts[v].y);
      }
    }
    cell = 2.0 * maxlen;
    nx = std::max(1, (int)((hi.x - lo.x) / cell) + 2);
    ny = std::max(1, (int)((hi.y - lo.y) / cell) + 2);
    buckets.resize((size_t)nx * ny);
    for (int i = 0; i < (int)segs.size(); ++i) {
      Vec2 a = pts[segs[i].a], bb = pts[segs[i].b];
      int x0 = cx(std::min(a.x, bb.x)), x1 = cx(std::max(a.x, bb.x));
      int y0 = cy(std::min(a.y, bb.y)), y1 = cy(std::max(a.y, bb.y));
      for (int x = x0; x <= x1; ++x)
        for (int y = y0; y <= y1; ++y) buckets[(size_t)y * nx + x].push_back(i);
    }
  }
  int cx(double x) const { return std::clamp((int)((x - lo.x) / cell), 0, nx - 1); }
  int cy(double y) const { return std::clamp((int)((y - lo.y) / cell), 0, ny - 1); }

  template <class F>
  void near(Vec2 p, double radius, F&& f) const {
    int x0 = cx(p.x - radius), x1 = cx(p.x + radius);
    int y0 = cy(p.y - radius), y1 = cy(p.y + radius);
    for (int x = x0; x <= x1; ++x)
      for (int y = y0; y <= y1; ++y)
        for (int i : buckets[(size_t)y * nx + x]) f(i);
  }
};

bool point_inside(const std::vector<Vec2>& pts, const std::vector<detail::Segment>& segs, Vec2 p) {
  // even-odd ray crossing over all boundary loops (holes included)
  int crossings = 0;
  for (const auto& s : segs) {
    Vec2 a = pts[s.a], b = pts[s.b];
    if ((a.y > p.y) == (b.y > p.y)) continue;
    double x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
    if (x > p.x) ++crossings;
  }
  return crossings % 2 == 1;
}

double dist_point_segment(Vec2 p, Vec2 a, Vec2 b) {
  Vec2 ab = b - a;
  double t = dot(p - a, ab) / std::max(dot(ab, ab), 1e-300);
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

std::vector<Vec2> interior_lattice(const std::vector<Vec2>& bpts,
                                   const std::vector<detail::Segment>& segs, int n) {
  double h = 1.0 / n;
  Vec2 lo{1e300, 1e300}, hi{-1e300, -1e300};
  for (const Vec2& p : bpts) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
  }
  SegGrid grid(bpts, segs);
  std::vector<Vec2> out;
  double dy = h * std::sqrt(3.0) / 2.0;
  int rows = (int)((hi.y - lo.y) / dy) + 1;
  for (int j = 0; j <= rows; ++j) {
    double y = lo.y + (j + 0.5) * dy;
    if (y >= hi.y) break;
    double x0 = lo.x + (j % 2 ? 0.75 * h : 0.25 * h);
    for (int i = 0;; ++i) {
      double x = x0 + i * h;
      if (x >= hi.x) break;
      uint64_t hsh = fnv1a(&i, sizeof i, fnv1a(&j, sizeof j));
      double jx = 0.04 * h * ((double)(hsh & 0xffff) / 65535.0 - 0.5);
      double jy = 0.04 * h * ((double)((hsh >> 16) & 0xffff) / 65535.0 - 0.5);
      Vec2 p{x + jx, y + jy};
      bool ok = true;
      grid.near(p, 1.4 * h, [&](int si) {
        if (!ok) return;
        Vec2 a = bpts[segs[si].a], b = bpts[segs[si].b];
        double len = norm(b - a);
        Vec2 mid = 0.5 * (a + b);
        if (norm(p - mid) < 0.62 * len || dist_point_segment(p, a, b) < 0.55 * h ||
            norm(p - a) < 0.55 * h || norm(p - b) < 0.55 * h)
          ok = false;
      });
      if (!ok) continue;
      if (!point_inside(bpts, segs, p)) continue;
      out.push_back(p);
    }
  }
  return out;
}

Mesh finish_mesh(const detail::TriangulateResult& r, const DomainSpec& spec) {
  Mesh m;
  m.vertices = r.points;
  m.triangles = r.triangles;
  // walls in stored order; port edges ordered along each chain
  std::vector<detail::Segment> port_segs, wall_segs;
  for (const auto& s : r.segments)
    (s.tag >= 1 ? port_segs : wall_segs).push_back(s);
  std::sort(port_segs.begin(), port_segs.end(), [](const auto& x, const auto& y) {
    if (x.tag != y.tag) return x.tag < y.tag;
    if (x.curve != y.curve) return x.curve < y.curve;
    return x.t0 < y.t0;
  });
  for (const auto& s : wall_segs) m.boundary_edges.push_back({s.a, s.b, 0});
  for (const auto& s : port_segs) m.boundary_edges.push_back({s.a, s.b, s.tag});
  m.finalize_ports();

  auto widths = spec.port_widths();
  if (m.ports.size() != widths.size())
    throw InvalidGeometry("generated mesh lost a port");
  for (size_t k = 0; k < widths.size(); ++k) {
    if (std::abs(m.ports[k].width - widths[k]) > 1e-9 * widths[k])
      throw InvalidGeometry("port width deviates from the declared width");
  }
  double want = spec.analytic_area();
  if (std::abs(m.area() - want) > 2e-3 * want)
    throw InvalidGeometry("mesh area deviates from the analytic domain area by more than 0.2%");
  m.validate(spec.refinement);
  return m;
}

Mesh build_channel(const DomainSpec& spec) {
  double w = spec.channel_width, L = spec.channel_length;
  int n = spec.refinement;
  BoundaryBuilder b;
  std::vector<Vec2> seeds;
  b.begin_loop({0, 0});
  b.line_to({L, 0}, pieces_for(L, n), 0);
  b.line_to({L, w}, pieces_for(w, n), 2);  // right port, bottom to top
  b.line_to({0, w}, pieces_for(L, n), 0);
  // left port traversed top to bottom; parameter reversed so the chain runs
  // bottom to top like the right port
  b.line_to({0, 0}, pieces_for(w, n), 1, b.loop_start, true);
  if (spec.obstacle_radius > 0.0)
    add_obstacle(b, seeds, {L / 2.0, w / 2.0 + spec.obstacle_offset}, spec.obstacle_radius, n);

  detail::TriangulateInput in;
  in.points = b.pts;
  in.num_boundary_points = (int)b.pts.size();
  in.segments = b.segs;
  in.hole_seeds = seeds;
  in.min_boundary_edge = 0.5 / n;
  auto lattice = interior_lattice(b.pts, b.segs, n);
  in.points.insert(in.points.end(), lattice.begin(), lattice.end());
  return finish_mesh(detail::triangulate(in), spec);
}

Mesh build_disc(const DomainSpec& spec) {
  double r = spec.disc_radius;
  int n = spec.refinement;
  int K = (int)spec.stubs.size();
  // traversal order by angle; port tags stay in declared order
  std::vector<int> order(K);
  for (int k = 0; k < K; ++k) order[k] = k;
  auto ang = [&](int k) {
    double a = std::fmod(spec.stubs[k].attach_angle, 2.0 * kPi);
    return a < 0 ? a + 2.0 * kPi : a;
  };
  std::sort(order.begin(), order.end(), [&](int x, int y) { return ang(x) < ang(y); });

  int Nfull = std::max(8, pieces_for(2.0 * kPi * r, n));
  double rho = equal_area_radius(r, Nfull);

  BoundaryBuilder b;
  std::vector<Vec2> seeds;
  auto chord_pt = [&](int k, double sign) {
    double a = ang(k) + sign * chord_angle(spec.stubs[k].width, r) / 2.0;
    return Vec2{r * std::cos(a), r * std::sin(a)};
  };
  int k0 = order[0];
  b.begin_loop(chord_pt(k0, -1.0));
  for (int i = 0; i < K; ++i) {
    int k = order[i];
    const StubSpec& st = spec.stubs[k];
    Vec2 nhat{std::cos(ang(k)), std::sin(ang(k))};
    Vec2 A = chord_pt(k, -1.0), B = chord_pt(k, 1.0);
    b.line_to(A + st.length * nhat, pieces_for(st.length, n), 0);
    b.line_to(B + st.length * nhat, pieces_for(st.width, n), k + 1);  // port, A' to B'
    b.line_to(B, pieces_for(st.length, n), 0);
    int knext = order[(i + 1) % K];
    double a0 = ang(k) + chord_angle(st.width, r) / 2.0;
    double a1 = ang(knext) - chord_angle(spec.stubs[knext].width, r) / 2.0;
    if (i + 1 == K) a1 += 2.0 * kPi;
    while (a1 <= a0) a1 += 2.0 * kPi;
    // next chord endpoint sits exactly on radius r; intermediate arc vertices on rho
    int target = (i + 1 == K) ? b.loop_start : b.add(chord_pt(knext, -1.0));
    b.arc_to({0, 0}, rho, a0, a1, std::max(1, pieces_for((a1 - a0) * r, n)), 0, target);
  }
  if (spec.obstacle_radius > 0.0)
    add_obstacle(b, seeds, {0.0, spec.obstacle_offset}, spec.obstacle_radius, n);

  detail::TriangulateInput in;
  in.points = b.pts;
  in.num_boundary_points = (int)b.pts.size();
  in.segments = b.segs;
  in.hole_seeds = seeds;
  in.min_boundary_edge = 0.5 / n;
  auto lattice = interior_lattice(b.pts, b.segs, n);
  in.points.insert(in.points.end(), lattice.begin(), lattice.end());
  return finish_mesh(detail::triangulate(in), spec);
}

}  // namespace

void DomainSpec::validate() const {
  if (refinement < 4) throw ConfigError("refinement must be at least 4");
  switch (kind) {
    case DomainKind::ChannelWithObstacle: {
      if (channel_width <= 0 || channel_length <= 0)
        throw InvalidGeometry("channel dimensions must be positive");
      if (obstacle_radius < 0) throw InvalidGeometry("obstacle radius must be nonnegative");
      if (obstacle_radius + std::abs(obstacle_offset) >= channel_width / 2.0)
        throw InvalidGeometry("obstacle must lie strictly inside the channel");
      if (obstacle_radius > 0 && obstacle_radius + 2.0 / refinement >= channel_length / 2.0)
        throw InvalidGeometry("obstacle too close to the ports");
      break;
    }
    case DomainKind::DiscWithStubs: {
      if (disc_radius <= 0) throw InvalidGeometry("disc radius must be positive");
      if (stubs.empty()) throw InvalidGeometry("disc domain needs at least one stub");
      for (const auto& s : stubs) {
        if (s.width <= 0 || s.width >= 2.0 * disc_radius)
          throw InvalidGeometry("stub width must lie in (0, 2 R)");
        if (s.length <= 0) throw InvalidGeometry("stub length must be positive");
      }
      // pairwise non-overlapping chords on the circle
      std::vector<std::pair<double, double>> arcs;
      for (const auto& s : stubs) {
        double a = std::fmod(s.attach_angle, 2.0 * kPi);
        if (a < 0) a += 2.0 * kPi;
        double half = chord_angle(s.width, disc_radius) / 2.0;
        arcs.emplace_back(a - half, a + half);
      }
      std::sort(arcs.begin(), arcs.end());
      for (size_t i = 0; i + 1 < arcs.size(); ++i)
        if (arcs[i].second >= arcs[i + 1].first)
          throw InvalidGeometry("stubs overlap on the circle");
      if (!arcs.empty() && arcs.back().second - 2.0 * kPi >= arcs.front().first)
        throw InvalidGeometry("stubs overlap on the circle");
      if (obstacle_radius > 0) {
        double apo = disc_radius;
        for (const auto& s : stubs)
          apo = std::min(apo, std::sqrt(disc_radius * disc_radius - s.width * s.width / 4.0));
        if (obstacle_radius + std::abs(obstacle_offset) >= apo - 1.0 / refinement)
          throw InvalidGeometry("obstacle too close to the boundary");
      }
      break;
    }
    case DomainKind::ExternalMesh:
      if (!mesh_path) throw ConfigError("external mesh requires mesh_path");
      break;
  }
}

double DomainSpec::analytic_area() const {
  switch (kind) {
    case DomainKind::ChannelWithObstacle:
      return channel_width * channel_length - kPi * obstacle_radius * obstacle_radius;
    case DomainKind::DiscWithStubs: {
      double a = kPi * disc_radius * disc_radius;
      for (const auto& s : stubs)
        a += s.width * s.length - segment_area(s.width, disc_radius);
      a -= kPi * obstacle_radius * obstacle_radius;
      return a;
    }
    default:
      throw ConfigError("no analytic area for an external mesh");
  }
}

int DomainSpec::num_ports() const {
  if (kind == DomainKind::ChannelWithObstacle) return 2;
  if (kind == DomainKind::DiscWithStubs) return (int)stubs.size();
  return -1;  // determined by the mesh file
}

std::vector<double> DomainSpec::port_widths() const {
  if (kind == DomainKind::ChannelWithObstacle) return {channel_width, channel_width};
  std::vector<double> w;
  for (const auto& s : stubs) w.push_back(s.width);
  return w;
}

double Mesh::area() const {
  double a = 0.0;
  for (const auto& t : triangles) {
    Vec2 p = vertices[t[0]], q = vertices[t[1]], r = vertices[t[2]];
    a += cross(q - p, r - p);
  }
  return a / 2.0;
}

double Mesh::min_angle_deg() const {
  double best = 180.0;
  for (const auto& t : triangles) {
    Vec2 p = vertices[t[0]], q = vertices[t[1]], r = vertices[t[2]];
    double la = norm(r - q), lb = norm(p - r), lc = norm(q - p);
    auto ang = [](double opp, double s1, double s2) {
      double v = std::clamp((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2), -1.0, 1.0);
      return std::acos(v) * 180.0 / kPi;
    };
    best = std::min({best, ang(la, lb, lc), ang(lb, lc, la), ang(lc, la, lb)});
  }
  return best;
}

int Mesh::num_interior_holes() const {
  std::set<std::pair<int, int>> edges;
  for (const auto& t : triangles)
    for (int e = 0; e < 3; ++e)
      edges.insert({std::min(t[e], t[(e + 1) % 3]), std::max(t[e], t[(e + 1) % 3])});
  long V = (long)vertices.size(), E = (long)edges.size(), T = (long)triangles.size();
  return (int)(1 - (V - E + T));
}

void Mesh::finalize_ports() {
  ports.clear();
  int max_tag = 0;
  for (const auto& e : boundary_edges) max_tag = std::max(max_tag, e.tag);
  for (int tag = 1; tag <= max_tag; ++tag) {
    std::map<int, int> next;  // directed chain a -> b
    std::set<int> heads, tails;
    for (const auto& e : boundary_edges) {
      if (e.tag != tag) continue;
      if (next.count(e.a))
        throw InvariantViolation("port chain", "port " + std::to_string(tag) + " branches");
      next[e.a] = e.b;
      heads.insert(e.a);
      tails.insert(e.b);
    }
    if (next.empty())
      throw InvariantViolation("port chain", "port " + std::to_string(tag) + " has no edges");
    int start = -1;
    for (int h : heads)
      if (!tails.count(h)) {
        if (start != -1)
          throw InvariantViolation("port chain", "port " + std::to_string(tag) + " is disconnected");
        start = h;
      }
    if (start == -1)
      throw InvariantViolation("port chain", "port " + std::to_string(tag) + " forms a cycle");
    Port p;
    p.chain.push_back(start);
    int v = start;
    while (next.count(v)) {
      v = next[v];
      p.chain.push_back(v);
    }
    if (p.chain.size() != next.size() + 1)
      throw InvariantViolation("port chain", "port " + std::to_string(tag) + " is disconnected");
    Vec2 a = vertices[p.chain.front()], b = vertices[p.chain.back()];
    double len = norm(b - a);
    double total = 0.0, along_prev = 0.0;
    for (size_t i = 0; i + 1 < p.chain.size(); ++i)
      total += norm(vertices[p.chain[i + 1]] - vertices[p.chain[i]]);
    for (size_t i = 1; i + 1 < p.chain.size(); ++i) {
      Vec2 q = vertices[p.chain[i]];
      if (std::abs(cross(b - a, q - a)) > 1e-9 * len * len)
        throw InvariantViolation("port straightness",
                                 "port " + std::to_string(tag) + " chain is not collinear");
      double along = dot(q - a, b - a) / len;
      if (along <= along_prev)
        throw InvariantViolation("port parameterization",
                                 "port " + std::to_string(tag) + " chain is not monotone");
      along_prev = along;
    }
    p.width = total;
    ports.push_back(std::move(p));
  }
}

std::vector<double> Mesh::port_arclength(int port) const {
  const Port& p = ports.at(port);
  std::vector<double> s(p.chain.size(), 0.0);
  for (size_t i = 1; i < p.chain.size(); ++i)
    s[i] = s[i - 1] + norm(vertices[p.chain[i]] - vertices[p.chain[i - 1]]);
  return s;
}

void Mesh::validate(int refinement_n) const {
  if (vertices.empty() || triangles.empty())
    throw InvariantViolation("non-empty", "mesh has no elements");
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& t : triangles) {
    Vec2 p = vertices[t[0]], q = vertices[t[1]], r = vertices[t[2]];
    if (cross(q - p, r - p) <= 0.0)
      throw InvariantViolation("orientation", "triangle with nonpositive signed area");
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      edge_count[{std::min(a, b), std::max(a, b)}]++;
    }
  }
  std::set<std::pair<int, int>> bset;
  for (const auto& e : boundary_edges) {
    auto key = std::make_pair(std::min(e.a, e.b), std::max(e.a, e.b));
    if (!bset.insert(key).second)
      throw InvariantViolation("conforming", "duplicate boundary edge");
  }
  for (const auto& [key, cnt] : edge_count) {
    bool is_b = bset.count(key) > 0;
    if (is_b && cnt != 1)
      throw InvariantViolation("conforming", "boundary edge shared by " + std::to_string(cnt) +
                                                  " triangles");
    if (!is_b && cnt != 2)
      throw InvariantViolation("conforming", "interior edge shared by " + std::to_string(cnt) +
                                                  " triangles");
  }
  for (const auto& key : bset)
    if (!edge_count.count(key))
      throw InvariantViolation("conforming", "boundary edge missing from the triangulation");
  double ang = min_angle_deg();
  if (ang < 20.0 - 1e-9)
    throw InvariantViolation("minimum angle", "triangle angle " + std::to_string(ang) + " below 20");
  if (refinement_n > 0) {
    double lo = 0.5 / refinement_n * (1.0 - 1e-9), hi = 2.0 / refinement_n * (1.0 + 1e-9);
    for (const auto& e : boundary_edges) {
      double len = norm(vertices[e.b] - vertices[e.a]);
      if (len < lo || len > hi)
        throw InvariantViolation("boundary edge length",
                                 "edge length " + std::to_string(len) + " outside [0.5/n, 2/n]");
    }
  }
}

std::string Mesh::fingerprint() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                (unsigned long long)fnv1a(mesh_to_string(*this)));
  return buf;
}

Mesh build_domain(const DomainSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case DomainKind::ChannelWithObstacle:
      return build_channel(spec);
    case DomainKind::DiscWithStubs:
      return build_disc(spec);
    case DomainKind::ExternalMesh: {
      Mesh m = read_mesh(*spec.mesh_path);
      m.validate(spec.refinement);
      return m;
    }
  }
  throw ConfigError("unknown domain kind");
}

}  // namespace wg::geometry
