#include "tgs/io.hpp"

#include <cstring>
#include <fstream>

#include "tgs/appearance.hpp"

namespace tgs {

namespace {

class Writer {
 public:
  Writer(const std::string& path, const char magic[4]) : os_(path, std::ios::binary), path_(path) {
    if (!os_) throw format_error("cannot open for write: " + path);
    os_.write(magic, 4);
  }
  void u32(uint32_t v) { raw(&v, 4); }
  void u8(uint8_t v) { raw(&v, 1); }
  void f32(float v) { raw(&v, 4); }
  void f64(double v) { raw(&v, 8); }
  void f32_block(const double* p, std::size_t n) {
    std::vector<float> f(p, p + n);
    raw(f.data(), 4 * n);
  }
  void u32_block(const uint32_t* p, std::size_t n) { raw(p, 4 * n); }
  void close() {
    os_.flush();
    if (!os_) throw format_error("write failed: " + path_);
  }

 private:
  void raw(const void* p, std::size_t n) {
    os_.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  std::ofstream os_;
  std::string path_;
};

class Reader {
 public:
  Reader(const std::string& path, const char magic[4]) : is_(path, std::ios::binary), path_(path) {
    if (!is_) throw format_error("cannot open for read: " + path);
    char m[4];
    raw(m, 4);
    if (std::memcmp(m, magic, 4) != 0)
      throw format_error("bad magic in " + path + " (expected " +
                         std::string(magic, 4) + ")");
  }
  uint32_t u32() { uint32_t v; raw(&v, 4); return v; }
  uint8_t u8() { uint8_t v; raw(&v, 1); return v; }
  float f32() { float v; raw(&v, 4); return v; }
  double f64() { double v; raw(&v, 8); return v; }
  void f32_block(double* p, std::size_t n) {
    std::vector<float> f(n);
    raw(f.data(), 4 * n);
    for (std::size_t i = 0; i < n; ++i) p[i] = f[i];
  }
  void u32_block(uint32_t* p, std::size_t n) { raw(p, 4 * n); }

 private:
  void raw(void* p, std::size_t n) {
    is_.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!is_) throw format_error("truncated file: " + path_);
  }
  std::ifstream is_;
  std::string path_;
};

}  // namespace

void write_gaussians(const std::string& path, const GaussianSet& set) {
  Writer w(path, "TGS1");
  std::size_t n = set.size();
  w.u32(static_cast<uint32_t>(n));
  w.u32(static_cast<uint32_t>(set.sh_degree));
  w.u32_block(set.ids.data(), n);
  w.f32_block(set.pos.data(), 3 * n);
  w.f32_block(set.rot.data(), 4 * n);
  w.f32_block(set.log_scale.data(), 3 * n);
  w.f32_block(set.opacity.data(), n);
  w.f32_block(set.sh.data(), static_cast<std::size_t>(set.sh_per_gaussian()) * n);
  w.close();
}

GaussianSet read_gaussians(const std::string& path) {
  Reader r(path, "TGS1");
  GaussianSet set;
  std::size_t n = r.u32();
  set.sh_degree = static_cast<int>(r.u32());
  set.resize(n);
  r.u32_block(set.ids.data(), n);
  r.f32_block(set.pos.data(), 3 * n);
  r.f32_block(set.rot.data(), 4 * n);
  r.f32_block(set.log_scale.data(), 3 * n);
  r.f32_block(set.opacity.data(), n);
  r.f32_block(set.sh.data(), static_cast<std::size_t>(set.sh_per_gaussian()) * n);
  return set;
}

void write_graph(const std::string& path, const DeformGraph& graph) {
  Writer w(path, "TGG1");
  w.u32(static_cast<uint32_t>(graph.size()));
  w.u32(static_cast<uint32_t>(graph.k));
  w.f64(graph.influence_radius);
  for (std::size_t i = 0; i < graph.size(); ++i) {
    w.u32(static_cast<uint32_t>(graph.neighbors[i].size()));
    w.u32_block(graph.neighbors[i].data(), graph.neighbors[i].size());
    for (double wt : graph.weights[i]) w.f32(static_cast<float>(wt));
  }
  w.close();
}

DeformGraph read_graph(const std::string& path) {
  Reader r(path, "TGG1");
  DeformGraph g;
  std::size_t n = r.u32();
  g.k = static_cast<int>(r.u32());
  g.influence_radius = r.f64();
  g.neighbors.resize(n);
  g.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t deg = r.u32();
    g.neighbors[i].resize(deg);
    r.u32_block(g.neighbors[i].data(), deg);
    g.weights[i].resize(deg);
    for (std::size_t e = 0; e < deg; ++e) g.weights[i][e] = r.f32();
  }
  return g;
}

void write_glut(const std::string& path, const Glut& glut) {
  Writer w(path, "TGL1");
  w.u32(static_cast<uint32_t>(glut.size()));
  for (const auto& e : glut.entries) {
    w.u32(e.id);
    w.u32(e.birth);
    w.u32(e.death);
    w.u8(static_cast<uint8_t>(e.origin));
    w.f32(static_cast<float>(e.birth_position.x));
    w.f32(static_cast<float>(e.birth_position.y));
    w.f32(static_cast<float>(e.birth_position.z));
  }
  w.close();
}

Glut read_glut(const std::string& path) {
  Reader r(path, "TGL1");
  Glut glut;
  std::size_t n = r.u32();
  glut.entries.resize(n);
  for (auto& e : glut.entries) {
    e.id = r.u32();
    e.birth = r.u32();
    e.death = r.u32();
    e.origin = static_cast<GaussianOrigin>(r.u8());
    e.birth_position.x = r.f32();
    e.birth_position.y = r.f32();
    e.birth_position.z = r.f32();
  }
  return glut;
}

void write_links(const std::string& path, const std::vector<AnchorLink>& links, int k) {
  Writer w(path, "TGA1");
  w.u32(static_cast<uint32_t>(links.size()));
  w.u32(static_cast<uint32_t>(k));
  for (const auto& l : links) {
    w.u32(l.anchor_id);
    w.u32(l.slot);
    w.f32(static_cast<float>(l.local_offset.x));
    w.f32(static_cast<float>(l.local_offset.y));
    w.f32(static_cast<float>(l.local_offset.z));
    w.f32(static_cast<float>(l.local_rotation.w));
    w.f32(static_cast<float>(l.local_rotation.x));
    w.f32(static_cast<float>(l.local_rotation.y));
    w.f32(static_cast<float>(l.local_rotation.z));
  }
  w.close();
}

std::vector<AnchorLink> read_links(const std::string& path, int& k) {
  Reader r(path, "TGA1");
  std::size_t n = r.u32();
  k = static_cast<int>(r.u32());
  std::vector<AnchorLink> links(n);
  for (auto& l : links) {
    l.anchor_id = r.u32();
    l.slot = r.u32();
    l.appearance_id = l.anchor_id * static_cast<uint32_t>(k) + l.slot;
    l.local_offset.x = r.f32();
    l.local_offset.y = r.f32();
    l.local_offset.z = r.f32();
    l.local_rotation.w = r.f32();
    l.local_rotation.x = r.f32();
    l.local_rotation.y = r.f32();
    l.local_rotation.z = r.f32();
  }
  return links;
}

}  // namespace tgs
