#include "wg/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <limits>
#include <map>
#include <numbers>

#include "wg/errors.hpp"

namespace wg::geometry::detail {

namespace {

double orient2d(Vec2 a, Vec2 b, Vec2 c) {
  double det = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  double mag = std::abs((b.x - a.x) * (c.y - a.y)) + std::abs((b.y - a.y) * (c.x - a.x));
  if (std::abs(det) > 1e-12 * mag) return det;
  long double detl = (long double)(b.x - a.x) * (c.y - a.y) - (long double)(b.y - a.y) * (c.x - a.x);
  return (double)detl;
}

// > 0 when d lies inside the circumcircle of CCW triangle (a,b,c).
double incircle(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  double adx = a.x - d.x, ady = a.y - d.y;
  double bdx = b.x - d.x, bdy = b.y - d.y;
  double cdx = c.x - d.x, cdy = c.y - d.y;
  double ad = adx * adx + ady * ady;
  double bd = bdx * bdx + bdy * bdy;
  double cd = cdx * cdx + cdy * cdy;
  double det = adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
  double mag = std::abs(adx * bdy * cd) + std::abs(adx * bd * cdy) + std::abs(ady * bdx * cd) +
               std::abs(ady * bd * cdx) + std::abs(ad * bdx * cdy) + std::abs(ad * bdy * cdx);
  if (std::abs(det) > 1e-12 * mag) return det;
  long double adxl = a.x - d.x, adyl = a.y - d.y;
  long double bdxl = b.x - d.x, bdyl = b.y - d.y;
  long double cdxl = c.x - d.x, cdyl = c.y - d.y;
  long double adl = adxl * adxl + adyl * adyl;
  long double bdl = bdxl * bdxl + bdyl * bdyl;
  long double cdl = cdxl * cdxl + cdyl * cdyl;
  long double detl = adxl * (bdyl * cdl - bdl * cdyl) - adyl * (bdxl * cdl - bdl * cdxl) +
                     adl * (bdxl * cdyl - bdyl * cdxl);
  return (double)detl;
}

struct Tri {
  int v[3];
  int adj[3];  // adj[i] is across the edge opposite v[i]; -1 = none
  bool alive = true;
};

class Delaunay {
 public:
  std::vector<Vec2> pts;
  std::vector<Tri> tris;
  int hint = 0;

  void init_super(Vec2 lo, Vec2 hi) {
    Vec2 c = 0.5 * (lo + hi);
    double r = 4.0 * std::max({hi.x - lo.x, hi.y - lo.y, 1.0});
    super0 = add_point({c.x - 2.4 * r, c.y - r});
    super1 = add_point({c.x + 2.4 * r, c.y - r});
    super2 = add_point({c.x, c.y + 2.2 * r});
    tris.push_back({{super0, super1, super2}, {-1, -1, -1}, true});
    hint = 0;
  }

  int add_point(Vec2 p) {
    pts.push_back(p);
    return static_cast<int>(pts.size()) - 1;
  }

  bool is_super(int v) const { return v == super0 || v == super1 || v == super2; }

  int locate(Vec2 p) const {
    int t = hint;
    if (t < 0 || t >= (int)tris.size() || !tris[t].alive) t = first_alive();
    int guard = 8 * (int)tris.size() + 64;
    while (guard-- > 0) {
      const Tri& T = tris[t];
      int next = -1;
      for (int e = 0; e < 3; ++e) {
        Vec2 a = pts[T.v[(e + 1) % 3]], b = pts[T.v[(e + 2) % 3]];
        if (orient2d(a, b, p) < 0.0) {
          next = T.adj[e];
          break;
        }
      }
      if (next == -1) return t;
      if (next == -2 || !tris[next].alive) break;
      t = next;
    }
    // fallback: exhaustive
    for (int i = 0; i < (int)tris.size(); ++i) {
      if (!tris[i].alive) continue;
      const Tri& T = tris[i];
      bool in = true;
      for (int e = 0; e < 3 && in; ++e)
        if (orient2d(pts[T.v[(e + 1) % 3]], pts[T.v[(e + 2) % 3]], p) < 0.0) in = false;
      if (in) return i;
    }
    throw InvalidGeometry("triangulation point location failed");
  }

  // Bowyer-Watson insertion of an existing point index.
  void insert(int pi) {
    Vec2 p = pts[pi];
    int t0 = locate(p);
    std::vector<int> cavity;
    std::vector<char> mark(tris.size(), 0);
    std::deque<int> queue{t0};
    mark[t0] = 1;
    while (!queue.empty()) {
      int t = queue.front();
      queue.pop_front();
      const Tri& T = tris[t];
      if (incircle(pts[T.v[0]], pts[T.v[1]], pts[T.v[2]], p) > -1e-30) {
        cavity.push_back(t);
        for (int e = 0; e < 3; ++e) {
          int nb = T.adj[e];
          if (nb >= 0 && !mark[nb] && tris[nb].alive) {
            mark[nb] = 1;
            queue.push_back(nb);
          }
        }
      } else {
        mark[t] = 2;  // visited, outside cavity
      }
    }
    std::vector<char> in_cavity(tris.size(), 0);
    for (int t : cavity) in_cavity[t] = 1;

    // cavity boundary: (edge a->b, outer neighbor)
    struct BEdge {
      int a, b, outer;
    };
    std::vector<BEdge> border;
    for (int t : cavity) {
      const Tri& T = tris[t];
      for (int e = 0; e < 3; ++e) {
        int nb = T.adj[e];
        if (nb < 0 || !in_cavity[nb]) {
          border.push_back({T.v[(e + 1) % 3], T.v[(e + 2) % 3], nb});
        }
      }
    }
    for (int t : cavity) tris[t].alive = false;

    std::map<int, int> tri_of_start, tri_of_end;  // border vertex -> new triangle
    std::vector<int> fresh;
    for (const BEdge& be : border) {
      Tri nt;
      nt.v[0] = pi;
      nt.v[1] = be.a;
      nt.v[2] = be.b;
      nt.adj[0] = be.outer;
      nt.adj[1] = -1;
      nt.adj[2] = -1;
      int id = (int)tris.size();
      tris.push_back(nt);
      fresh.push_back(id);
      tri_of_start[be.a] = id;
      tri_of_end[be.b] = id;
      if (be.outer >= 0) {
        Tri& O = tris[be.outer];
        for (int e = 0; e < 3; ++e) {
          int oa = O.v[(e + 1) % 3], ob = O.v[(e + 2) % 3];
          if ((oa == be.b && ob == be.a)) O.adj[e] = id;
        }
      }
    }
    // stitch the fan around pi: across edge (b,pi) sits the triangle starting at b,
    // across (pi,a) the one ending at a
    for (int id : fresh) {
      Tri& T = tris[id];
      auto s = tri_of_start.find(T.v[2]);
      if (s != tri_of_start.end()) T.adj[1] = s->second;
      auto e = tri_of_end.find(T.v[1]);
      if (e != tri_of_end.end()) T.adj[2] = e->second;
    }
    hint = fresh.empty() ? first_alive() : fresh.back();
  }

  int first_alive() const {
    for (int i = (int)tris.size() - 1; i >= 0; --i)
      if (tris[i].alive) return i;
    throw InvalidGeometry("empty triangulation");
  }

  int super0 = -1, super1 = -1, super2 = -1;
};

double tri_min_angle(Vec2 a, Vec2 b, Vec2 c) {
  double la = norm(c - b), lb = norm(a - c), lc = norm(b - a);
  auto ang = [](double opp, double s1, double s2) {
    double v = (s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2);
    v = std::clamp(v, -1.0, 1.0);
    return std::acos(v);
  };
  double A = ang(la, lb, lc), B = ang(lb, lc, la), C = std::numbers::pi - A - B;
  return std::min({A, B, C}) * 180.0 / std::numbers::pi;
}

Vec2 circumcenter(Vec2 a, Vec2 b, Vec2 c) {
  double d = 2.0 * ((a.x - c.x) * (b.y - c.y) - (b.x - c.x) * (a.y - c.y));
  if (std::abs(d) < 1e-30) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  double a2 = dot(a - c, a - c), b2 = dot(b - c, b - c);
  double ux = (a2 * (b.y - c.y) - b2 * (a.y - c.y)) / d;
  double uy = (b2 * (a.x - c.x) - a2 * (b.x - c.x)) / d;
  return {c.x + ux, c.y + uy};
}

struct EdgeKey {
  int a, b;
  bool operator<(const EdgeKey& o) const { return a != o.a ? a < o.a : b < o.b; }
};
EdgeKey ekey(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

class Mesher {
 public:
  explicit Mesher(const TriangulateInput& in) : in_(in), segs_(in.segments) {}

  TriangulateResult run() {
    build(in_.points);
    recover_conformity();
    for (int round = 0; round < in_.smoothing_rounds; ++round) {
      classify();
      smooth_interior();
      rebuild();
      recover_conformity();
    }
    classify();
    refine_quality();
    return extract();
  }

 private:
  const TriangulateInput& in_;
  std::vector<Segment> segs_;
  Delaunay dt_;
  std::vector<char> inside_;           // per triangle
  std::vector<char> is_boundary_pt_;   // per point

  void build(const std::vector<Vec2>& pts) {
    dt_ = Delaunay();
    Vec2 lo{1e300, 1e300}, hi{-1e300, -1e300};
    for (const Vec2& p : pts) {
      lo.x = std::min(lo.x, p.x);
      lo.y = std::min(lo.y, p.y);
      hi.x = std::max(hi.x, p.x);
      hi.y = std::max(hi.y, p.y);
    }
    dt_.init_super(lo, hi);
    is_boundary_pt_.assign(3, 1);
    for (size_t i = 0; i < pts.size(); ++i) {
      int id = dt_.add_point(pts[i]);
      is_boundary_pt_.push_back(i < (size_t)in_.num_boundary_points ? 1 : 0);
      dt_.insert(id);
    }
  }

  // Points are tracked with a +3 offset against input indexing (super vertices).
  static int off(int user_index) { return user_index + 3; }
  static int unoff(int dt_index) { return dt_index - 3; }

  std::map<EdgeKey, std::vector<int>> edge_tris() const {
    std::map<EdgeKey, std::vector<int>> m;
    for (int t = 0; t < (int)dt_.tris.size(); ++t) {
      if (!dt_.tris[t].alive) continue;
      const Tri& T = dt_.tris[t];
      for (int e = 0; e < 3; ++e) m[ekey(T.v[(e + 1) % 3], T.v[(e + 2) % 3])].push_back(t);
    }
    return m;
  }

  void recover_conformity() {
    for (int round = 0; round < 12; ++round) {
      std::map<EdgeKey, int> present;
      for (const Tri& T : dt_.tris) {
        if (!T.alive) continue;
        for (int e = 0; e < 3; ++e) present[ekey(T.v[(e + 1) % 3], T.v[(e + 2) % 3])]++;
      }
      std::vector<int> missing;
      for (int s = 0; s < (int)segs_.size(); ++s)
        if (!present.count(ekey(off(segs_[s].a), off(segs_[s].b)))) missing.push_back(s);
      if (missing.empty()) return;
      for (int s : missing) split_segment(s);
    }
    throw RefinementTooCoarse("could not recover boundary conformity");
  }

  void split_segment(int s) {
    Segment seg = segs_[s];
    Vec2 pa = dt_.pts[off(seg.a)], pb = dt_.pts[off(seg.b)];
    double len = norm(pb - pa);
    if (in_.min_boundary_edge > 0.0 && 0.5 * len < in_.min_boundary_edge * (1.0 - 1e-12))
      throw RefinementTooCoarse("boundary segment split would violate the minimum edge length");
    Vec2 mid = 0.5 * (pa + pb);
    int user = (int)dt_.pts.size() - 3;
    int id = dt_.add_point(mid);
    is_boundary_pt_.push_back(1);
    dt_.insert(id);
    double tm = 0.5 * (seg.t0 + seg.t1);
    segs_[s] = {seg.a, user, seg.tag, seg.curve, seg.t0, tm};
    segs_.push_back({user, seg.b, seg.tag, seg.curve, tm, seg.t1});
  }

  void classify() {
    auto et = edge_tris();
    std::map<EdgeKey, char> is_seg;
    for (const Segment& s : segs_) is_seg[ekey(off(s.a), off(s.b))] = 1;
    inside_.assign(dt_.tris.size(), -1);
    // flood OUTSIDE from every triangle touching a super vertex
    std::deque<int> queue;
    for (int t = 0; t < (int)dt_.tris.size(); ++t) {
      if (!dt_.tris[t].alive) continue;
      const Tri& T = dt_.tris[t];
      if (dt_.is_super(T.v[0]) || dt_.is_super(T.v[1]) || dt_.is_super(T.v[2])) {
        inside_[t] = 0;
        queue.push_back(t);
      }
    }
    auto flood = [&](std::deque<int>& q) {
      while (!q.empty()) {
        int t = q.front();
        q.pop_front();
        const Tri& T = dt_.tris[t];
        for (int e = 0; e < 3; ++e) {
          int nb = T.adj[e];
          if (nb < 0 || !dt_.tris[nb].alive || inside_[nb] != -1) continue;
          if (is_seg.count(ekey(T.v[(e + 1) % 3], T.v[(e + 2) % 3]))) continue;
          inside_[nb] = inside_[t];
          q.push_back(nb);
        }
      }
    };
    flood(queue);
    for (const Vec2& seed : in_.hole_seeds) {
      int t = dt_.locate(seed);
      if (inside_[t] == -1) {
        inside_[t] = 0;
        std::deque<int> q{t};
        flood(q);
      }
    }
    for (int t = 0; t < (int)dt_.tris.size(); ++t) {
      if (!dt_.tris[t].alive) continue;
      if (inside_[t] == -1) {
        inside_[t] = 1;
        std::deque<int> q{t};
        flood(q);
      }
    }
  }

  void smooth_interior() {
    std::map<int, std::vector<int>> nbrs;
    for (int t = 0; t < (int)dt_.tris.size(); ++t) {
      if (!dt_.tris[t].alive || inside_[t] != 1) continue;
      const Tri& T = dt_.tris[t];
      for (int e = 0; e < 3; ++e) {
        nbrs[T.v[e]].push_back(T.v[(e + 1) % 3]);
        nbrs[T.v[e]].push_back(T.v[(e + 2) % 3]);
      }
    }
    for (auto& [v, ns] : nbrs) {
      if (is_boundary_pt_[v]) continue;
      std::sort(ns.begin(), ns.end());
      ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
      Vec2 avg{0, 0};
      for (int u : ns) avg = avg + dt_.pts[u];
      avg = (1.0 / ns.size()) * avg;
      dt_.pts[v] = avg;  // average of the Delaunay star stays inside it
    }
  }

  void rebuild() {
    std::vector<Vec2> pts(dt_.pts.begin() + 3, dt_.pts.end());
    std::vector<char> isb(is_boundary_pt_.begin() + 3, is_boundary_pt_.end());
    dt_ = Delaunay();
    Vec2 lo{1e300, 1e300}, hi{-1e300, -1e300};
    for (const Vec2& p : pts) {
      lo.x = std::min(lo.x, p.x);
      lo.y = std::min(lo.y, p.y);
      hi.x = std::max(hi.x, p.x);
      hi.y = std::max(hi.y, p.y);
    }
    dt_.init_super(lo, hi);
    is_boundary_pt_.assign(3, 1);
    for (size_t i = 0; i < pts.size(); ++i) {
      int id = dt_.add_point(pts[i]);
      is_boundary_pt_.push_back(isb[i]);
      dt_.insert(id);
    }
  }

  void refine_quality() {
    for (int round = 0; round < 40; ++round) {
      classify();
      struct Bad {
        double angle;
        int tri;
      };
      std::vector<Bad> bad;
      for (int t = 0; t < (int)dt_.tris.size(); ++t) {
        if (!dt_.tris[t].alive || inside_[t] != 1) continue;
        const Tri& T = dt_.tris[t];
        double a = tri_min_angle(dt_.pts[T.v[0]], dt_.pts[T.v[1]], dt_.pts[T.v[2]]);
        if (a < in_.min_angle_deg) bad.push_back({a, t});
      }
      if (bad.empty()) return;
      std::sort(bad.begin(), bad.end(), [](const Bad& x, const Bad& y) {
        return x.angle != y.angle ? x.angle < y.angle : x.tri < y.tri;
      });
      bool progressed = false;
      for (const Bad& bt : bad) {
        if (!dt_.tris[bt.tri].alive) continue;
        const Tri& T = dt_.tris[bt.tri];
        Vec2 c = circumcenter(dt_.pts[T.v[0]], dt_.pts[T.v[1]], dt_.pts[T.v[2]]);
        if (std::isnan(c.x)) continue;
        int enc = encroached_segment(c);
        if (enc >= 0) {
          split_segment(enc);
          progressed = true;
          continue;
        }
        int tc = dt_.locate(c);
        if (inside_[tc] != 1) continue;  // off-domain circumcenter without encroachment
        int id = dt_.add_point(c);
        is_boundary_pt_.push_back(0);
        dt_.insert(id);
        inside_.resize(dt_.tris.size(), -1);
        progressed = true;
      }
      if (!progressed) throw RefinementTooCoarse("cannot reach the minimum angle bound");
      recover_conformity();
    }
    classify();
    for (int t = 0; t < (int)dt_.tris.size(); ++t) {
      if (!dt_.tris[t].alive || inside_[t] != 1) continue;
      const Tri& T = dt_.tris[t];
      if (tri_min_angle(dt_.pts[T.v[0]], dt_.pts[T.v[1]], dt_.pts[T.v[2]]) < in_.min_angle_deg)
        throw RefinementTooCoarse("cannot reach the minimum angle bound");
    }
  }

  int encroached_segment(Vec2 c) const {
    int best = -1;
    double worst = 0.0;
    for (int s = 0; s < (int)segs_.size(); ++s) {
      Vec2 pa = dt_.pts[off(segs_[s].a)], pb = dt_.pts[off(segs_[s].b)];
      Vec2 mid = 0.5 * (pa + pb);
      double r = 0.5 * norm(pb - pa);
      double d = norm(c - mid);
      if (d < r * (1.0 - 1e-12)) {
        double depth = r - d;
        if (depth > worst) {
          worst = depth;
          best = s;
        }
      }
    }
    return best;
  }

  TriangulateResult extract() {
    classify();
    TriangulateResult out;
    // remap in insertion order so boundary points keep stable indices
    std::vector<int> remap(dt_.pts.size(), -1);
    std::vector<char> used(dt_.pts.size(), 0);
    for (int t = 0; t < (int)dt_.tris.size(); ++t) {
      if (!dt_.tris[t].alive || inside_[t] != 1) continue;
      for (int e = 0; e < 3; ++e) used[dt_.tris[t].v[e]] = 1;
    }
    for (int i = 3; i < (int)dt_.pts.size(); ++i) {
      if (!used[i]) continue;
      remap[i] = (int)out.points.size();
      out.points.push_back(dt_.pts[i]);
    }
    for (int t = 0; t < (int)dt_.tris.size(); ++t) {
      if (!dt_.tris[t].alive || inside_[t] != 1) continue;
      const Tri& T = dt_.tris[t];
      std::array<int, 3> tv{remap[T.v[0]], remap[T.v[1]], remap[T.v[2]]};
      if (tv[0] < 0 || tv[1] < 0 || tv[2] < 0) throw InvalidGeometry("kept triangle uses a dropped vertex");
      Vec2 a = out.points[tv[0]], b = out.points[tv[1]], c = out.points[tv[2]];
      if (orient2d(a, b, c) < 0.0) std::swap(tv[1], tv[2]);
      out.triangles.push_back(tv);
    }
    out.segments.reserve(segs_.size());
    for (const Segment& s : segs_) {
      Segment r = s;
      r.a = remap[off(s.a)];
      r.b = remap[off(s.b)];
      if (r.a < 0 || r.b < 0) throw InvalidGeometry("boundary vertex missing from kept mesh");
      out.segments.push_back(r);
    }
    return out;
  }
};

}  // namespace

TriangulateResult triangulate(const TriangulateInput& input) {
  Mesher m(input);
  return m.run();
}

}  // namespace wg::geometry::detail
