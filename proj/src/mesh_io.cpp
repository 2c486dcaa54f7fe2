#include <fstream>
#include <sstream>

#include "wg/errors.hpp"
#include "wg/geometry.hpp"
#include "wg/numeric.hpp"

namespace wg::geometry {

namespace {

// Token stream that tracks line numbers and strips '#' comments.
class Tokens {
 public:
  explicit Tokens(const std::string& text) : in_(text) {}

  std::string next(const char* what) {
    for (;;) {
      if (!(line_stream_ >> tok_)) {
        std::string line;
        if (!std::getline(in_, line))
          throw ParseError(std::string("unexpected end of file, expected ") + what, line_no_);
        ++line_no_;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line_stream_ = std::istringstream(line);
        continue;
      }
      return tok_;
    }
  }

  long integer(const char* what) {
    std::string t = next(what);
    try {
      size_t pos = 0;
      long v = std::stol(t, &pos);
      if (pos != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw ParseError("expected integer for " + std::string(what) + ", got '" + t + "'", line_no_);
    }
  }

  double real(const char* what) {
    std::string t = next(what);
    try {
      size_t pos = 0;
      double v = std::stod(t, &pos);
      if (pos != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw ParseError("expected number for " + std::string(what) + ", got '" + t + "'", line_no_);
    }
  }

  int line() const { return line_no_; }

 private:
  std::istringstream in_;
  std::istringstream line_stream_;
  std::string tok_;
  int line_no_ = 0;
};

}  // namespace

std::string mesh_to_string(const Mesh& m) {
  std::ostringstream out;
  out << "wgmesh 1\n";
  out << m.vertices.size() << " " << m.boundary_edges.size() << " " << m.triangles.size() << "\n";
  for (const Vec2& v : m.vertices) out << fmt17(v.x) << " " << fmt17(v.y) << "\n";
  for (const auto& t : m.triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
  for (const auto& e : m.boundary_edges) out << e.a << " " << e.b << " " << e.tag << "\n";
  return out.str();
}

Mesh mesh_from_string(const std::string& text) {
  Tokens tk(text);
  std::string magic = tk.next("header");
  std::string version = tk.next("format version");
  if (magic != "wgmesh" || version != "1")
    throw ParseError("not a 'wgmesh 1' file (header reads '" + magic + " " + version + "')",
                     tk.line());
  long V = tk.integer("vertex count");
  long E = tk.integer("edge count");
  long T = tk.integer("triangle count");
  if (V <= 0 || E < 0 || T <= 0) throw ParseError("nonpositive counts in header", tk.line());
  Mesh m;
  m.vertices.reserve(V);
  for (long i = 0; i < V; ++i) {
    double x = tk.real("vertex x"), y = tk.real("vertex y");
    m.vertices.push_back({x, y});
  }
  auto vcheck = [&](long idx, const char* what) {
    if (idx < 0 || idx >= V)
      throw ParseError(std::string(what) + " references missing vertex " + std::to_string(idx),
                       tk.line());
    return static_cast<int>(idx);
  };
  for (long i = 0; i < T; ++i) {
    int a = vcheck(tk.integer("triangle vertex"), "triangle");
    int b = vcheck(tk.integer("triangle vertex"), "triangle");
    int c = vcheck(tk.integer("triangle vertex"), "triangle");
    m.triangles.push_back({a, b, c});
  }
  for (long i = 0; i < E; ++i) {
    int a = vcheck(tk.integer("edge vertex"), "edge");
    int b = vcheck(tk.integer("edge vertex"), "edge");
    long tag = tk.integer("edge tag");
    if (tag < 0) throw ParseError("negative edge tag", tk.line());
    m.boundary_edges.push_back({a, b, static_cast<int>(tag)});
  }
  m.finalize_ports();
  m.validate();
  return m;
}

Mesh read_mesh(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open mesh file '" + path + "'", 0);
  std::stringstream ss;
  ss << f.rdbuf();
  return mesh_from_string(ss.str());
}

void write_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write mesh file '" + path + "'");
  f << mesh_to_string(mesh);
}

}  // namespace wg::geometry
