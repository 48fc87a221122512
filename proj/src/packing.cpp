#include "tgs/packing.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace tgs {

namespace {

constexpr const char* kGroupNames[5] = {"position", "rotation", "log_scale", "opacity",
                                        "sh"};

int group_channels(int g, int sh_degree) {
  switch (g) {
    case 0: return 3;
    case 1: return 4;
    case 2: return 3;
    case 3: return 1;
    default: return 3 * sh_coeff_count(sh_degree);
  }
}

const std::vector<double>& group_array(const GaussianSet& s, int g) {
  switch (g) {
    case 0: return s.pos;
    case 1: return s.rot;
    case 2: return s.log_scale;
    case 3: return s.opacity;
    default: return s.sh;
  }
}

uint64_t fnv1a(const void* data, std::size_t n, uint64_t h = 0xcbf29ce484222325ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

void classify(const Glut& glut, uint32_t total_frames, std::vector<uint32_t>* persistent,
              std::vector<uint32_t>* transient_ids) {
  persistent->clear();
  transient_ids->clear();
  for (const auto& e : glut.entries) {
    bool whole = e.birth == 1 && (e.death == kDeathOpen || e.death > total_frames);
    (whole ? persistent : transient_ids)->push_back(e.id);
  }
}

uint64_t morton_encode(Vec3 position, Vec3 bbox_lo, Vec3 bbox_hi, int bits_per_axis,
                       bool* clamped) {
  if (clamped) *clamped = false;
  uint64_t maxq = (1ull << bits_per_axis) - 1;
  auto quantize = [&](double v, double lo, double hi) -> uint64_t {
    double extent = hi - lo;
    if (extent <= 0) return 0;  // degenerate axis
    double s = (v - lo) / extent;
    if (s < 0 || s > 1) {
      if (clamped) *clamped = true;
      s = std::clamp(s, 0.0, 1.0);
    }
    return static_cast<uint64_t>(std::llround(s * static_cast<double>(maxq)));
  };
  uint64_t qx = quantize(position.x, bbox_lo.x, bbox_hi.x);
  uint64_t qy = quantize(position.y, bbox_lo.y, bbox_hi.y);
  uint64_t qz = quantize(position.z, bbox_lo.z, bbox_hi.z);
  uint64_t code = 0;
  for (int b = 0; b < bits_per_axis; ++b) {
    code |= ((qx >> b) & 1) << (3 * b);
    code |= ((qy >> b) & 1) << (3 * b + 1);
    code |= ((qz >> b) & 1) << (3 * b + 2);
  }
  return code;
}

uint32_t LayoutPlan::slot_of(uint32_t id) const {
  auto it = std::lower_bound(id_to_slot_.begin(), id_to_slot_.end(),
                             std::make_pair(id, 0u));
  if (it == id_to_slot_.end() || it->first != id) return kInvalidId;
  return it->second;
}

void LayoutPlan::finish() {
  id_to_slot_.clear();
  id_to_slot_.reserve(slot_ids.size());
  for (uint32_t s = 0; s < slot_ids.size(); ++s)
    id_to_slot_.emplace_back(slot_ids[s], s);
  std::sort(id_to_slot_.begin(), id_to_slot_.end());
  hash = fnv1a(slot_ids.data(), slot_ids.size() * sizeof(uint32_t));
}

LayoutPlan build_layout(const Glut& glut, uint32_t total_frames, int bits_per_axis,
                        LayoutMode mode) {
  Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
  for (const auto& e : glut.entries) {
    lo.x = std::min(lo.x, e.birth_position.x);
    lo.y = std::min(lo.y, e.birth_position.y);
    lo.z = std::min(lo.z, e.birth_position.z);
    hi.x = std::max(hi.x, e.birth_position.x);
    hi.y = std::max(hi.y, e.birth_position.y);
    hi.z = std::max(hi.z, e.birth_position.z);
  }
  auto code_of = [&](uint32_t id) {
    const GlutEntry* e = glut.find(id);
    return morton_encode(e->birth_position, lo, hi, bits_per_axis);
  };
  auto birth_of = [&](uint32_t id) { return glut.find(id)->birth; };

  std::vector<uint32_t> persistent, transient_ids;
  classify(glut, total_frames, &persistent, &transient_ids);

  LayoutPlan plan;
  switch (mode) {
    case LayoutMode::Combined: {
      std::sort(persistent.begin(), persistent.end(), [&](uint32_t a, uint32_t b) {
        uint64_t ca = code_of(a), cb = code_of(b);
        if (ca != cb) return ca < cb;
        return a < b;
      });
      std::sort(transient_ids.begin(), transient_ids.end(), [&](uint32_t a, uint32_t b) {
        uint32_t ba = birth_of(a), bb = birth_of(b);
        if (ba != bb) return ba < bb;
        uint64_t ca = code_of(a), cb = code_of(b);
        if (ca != cb) return ca < cb;
        return a < b;
      });
      plan.slot_ids = persistent;
      plan.slot_ids.insert(plan.slot_ids.end(), transient_ids.begin(),
                           transient_ids.end());
      plan.persistent_count = static_cast<uint32_t>(persistent.size());
      break;
    }
    case LayoutMode::LifespanOnly: {
      for (const auto& e : glut.entries) plan.slot_ids.push_back(e.id);
      std::sort(plan.slot_ids.begin(), plan.slot_ids.end(), [&](uint32_t a, uint32_t b) {
        uint32_t ba = birth_of(a), bb = birth_of(b);
        if (ba != bb) return ba < bb;
        return a < b;
      });
      plan.persistent_count = 0;
      break;
    }
    case LayoutMode::MortonOnly: {
      for (const auto& e : glut.entries) plan.slot_ids.push_back(e.id);
      std::sort(plan.slot_ids.begin(), plan.slot_ids.end(), [&](uint32_t a, uint32_t b) {
        uint64_t ca = code_of(a), cb = code_of(b);
        if (ca != cb) return ca < cb;
        return a < b;
      });
      plan.persistent_count = 0;
      break;
    }
  }

  plan.total_slots = static_cast<uint32_t>(plan.slot_ids.size());
  int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(
      std::max<uint32_t>(1, plan.total_slots)))));
  cols = (cols + 7) / 8 * 8;
  plan.cols = cols;
  plan.rows = static_cast<int>((plan.total_slots + cols - 1) / cols);
  if (plan.rows == 0) plan.rows = 1;
  plan.finish();
  return plan;
}

LayoutPlan induced_appearance_plan(const LayoutPlan& motion_plan, int k_slots) {
  LayoutPlan plan;
  plan.slot_ids.reserve(motion_plan.slot_ids.size() * k_slots);
  for (uint32_t id : motion_plan.slot_ids)
    for (int k = 0; k < k_slots; ++k)
      plan.slot_ids.push_back(id * static_cast<uint32_t>(k_slots) +
                              static_cast<uint32_t>(k));
  plan.persistent_count = motion_plan.persistent_count * k_slots;
  plan.total_slots = static_cast<uint32_t>(plan.slot_ids.size());
  int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(
      std::max<uint32_t>(1, plan.total_slots)))));
  cols = (cols + 7) / 8 * 8;
  plan.cols = cols;
  plan.rows = static_cast<int>((plan.total_slots + cols - 1) / cols);
  if (plan.rows == 0) plan.rows = 1;
  plan.finish();
  return plan;
}

Glut induced_appearance_glut(const Glut& motion, int k_slots) {
  Glut out;
  for (const auto& e : motion.entries)
    for (int k = 0; k < k_slots; ++k) {
      GlutEntry a = e;
      a.id = e.id * static_cast<uint32_t>(k_slots) + static_cast<uint32_t>(k);
      out.add(a);
    }
  return out;
}

// ------------------------------------------------------ attribute maps ----

const ChannelGroup& AttributeMaps::group(const std::string& name) const {
  for (const auto& g : groups)
    if (g.name == name) return g;
  throw invalid_input("AttributeMaps: no group named " + name);
}

AttributeRanges compute_ranges(const std::vector<const GaussianSet*>& frames) {
  AttributeRanges r;
  if (frames.empty()) return r;
  r.sh_degree = frames[0]->sh_degree;
  for (int g = 0; g < 5; ++g) {
    int ch = group_channels(g, r.sh_degree);
    r.lo[g].assign(ch, 1e300);
    r.hi[g].assign(ch, -1e300);
    for (const GaussianSet* f : frames) {
      const auto& arr = group_array(*f, g);
      std::size_t n = f->size();
      for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < ch; ++c) {
          double v = arr[i * ch + c];
          r.lo[g][c] = std::min(r.lo[g][c], v);
          r.hi[g][c] = std::max(r.hi[g][c], v);
        }
    }
    for (int c = 0; c < ch; ++c)
      if (r.lo[g][c] > r.hi[g][c]) r.lo[g][c] = r.hi[g][c] = 0.0;
  }
  return r;
}

BirthAttributes collect_birth_attributes(const std::vector<const GaussianSet*>& frames,
                                         const Glut& glut) {
  BirthAttributes out;
  out.attrs.sh_degree = frames.empty() ? 3 : frames[0]->sh_degree;
  for (const auto& e : glut.entries) {
    if (e.birth < 1 || e.birth > frames.size()) continue;
    const GaussianSet& f = *frames[e.birth - 1];
    std::size_t i = f.index_of(e.id);
    if (i == GaussianSet::npos)
      throw invalid_input("collect_birth_attributes: id " + std::to_string(e.id) +
                          " not live at its birth frame");
    out.ids.push_back(e.id);
    std::size_t gi = out.attrs.append(e.id);
    out.attrs.set_position(gi, f.position(i));
    out.attrs.set_rotation(gi, f.rotation(i));
    for (int a = 0; a < 3; ++a) out.attrs.log_scale[3 * gi + a] = f.log_scale[3 * i + a];
    out.attrs.opacity[gi] = f.opacity[i];
    int shp = f.sh_per_gaussian();
    std::copy_n(&f.sh[static_cast<std::size_t>(shp) * i], shp,
                &out.attrs.sh[static_cast<std::size_t>(shp) * gi]);
  }
  return out;
}

AttributeMaps pack_frame(uint32_t frame, const GaussianSet& live, const LayoutPlan& plan,
                         const AttributeRanges& ranges, const AttributeMaps* prior,
                         const BirthAttributes& births, std::size_t* clamped) {
  AttributeMaps maps;
  maps.frame = frame;
  maps.rows = plan.rows;
  maps.cols = plan.cols;
  maps.plan_hash = plan.hash;
  maps.sh_degree = ranges.sh_degree;
  if (prior && prior->plan_hash != plan.hash)
    throw format_error("pack_frame: prior maps built with a different plan");
  std::size_t grid = static_cast<std::size_t>(plan.rows) * plan.cols;
  std::size_t n_clamped = 0;

  for (int g = 0; g < 5; ++g) {
    ChannelGroup cg;
    cg.name = kGroupNames[g];
    cg.channels = group_channels(g, ranges.sh_degree);
    cg.lo = ranges.lo[g];
    cg.hi = ranges.hi[g];
    cg.samples.assign(static_cast<std::size_t>(cg.channels) * grid, 0);
    maps.groups.push_back(std::move(cg));
  }

  auto quantize = [&](int g, int c, double v) -> uint16_t {
    double lo = ranges.lo[g][c], hi = ranges.hi[g][c];
    if (hi <= lo) return 0;
    double s = (v - lo) / (hi - lo);
    if (s < 0 || s > 1) {
      ++n_clamped;
      s = std::clamp(s, 0.0, 1.0);
    }
    return static_cast<uint16_t>(std::lround(s * 65535.0));
  };

  for (uint32_t slot = 0; slot < plan.total_slots; ++slot) {
    uint32_t id = plan.slot_ids[slot];
    std::size_t live_i = live.index_of(id);
    if (live_i != GaussianSet::npos) {
      for (int g = 0; g < 5; ++g) {
        const auto& arr = group_array(live, g);
        int ch = maps.groups[g].channels;
        for (int c = 0; c < ch; ++c)
          maps.groups[g].samples[static_cast<std::size_t>(c) * grid + slot] =
              quantize(g, c, arr[live_i * ch + c]);
      }
    } else if (prior) {
      for (int g = 0; g < 5; ++g) {
        int ch = maps.groups[g].channels;
        for (int c = 0; c < ch; ++c)
          maps.groups[g].samples[static_cast<std::size_t>(c) * grid + slot] =
              prior->groups[g].samples[static_cast<std::size_t>(c) * grid + slot];
      }
    } else {
      std::size_t bi = births.attrs.index_of(id);
      if (bi == GaussianSet::npos)
        throw invalid_input("pack_frame: no birth attributes for id " +
                            std::to_string(id));
      for (int g = 0; g < 5; ++g) {
        const auto& arr = group_array(births.attrs, g);
        int ch = maps.groups[g].channels;
        for (int c = 0; c < ch; ++c)
          maps.groups[g].samples[static_cast<std::size_t>(c) * grid + slot] =
              quantize(g, c, arr[bi * ch + c]);
      }
    }
  }
  if (clamped) *clamped = n_clamped;
  return maps;
}

UnpackedFrame unpack_frame(const AttributeMaps& maps, const LayoutPlan& plan) {
  if (maps.plan_hash != plan.hash)
    throw format_error("unpack_frame: maps/plan hash mismatch");
  if (maps.rows != plan.rows || maps.cols != plan.cols)
    throw format_error("unpack_frame: grid dimension mismatch");
  UnpackedFrame out;
  out.rows = maps.rows;
  out.cols = maps.cols;
  out.sh_degree = maps.sh_degree;
  std::size_t grid = static_cast<std::size_t>(maps.rows) * maps.cols;
  std::vector<double>* arrs[5] = {&out.pos, &out.rot, &out.log_scale, &out.opacity,
                                  &out.sh};
  for (int g = 0; g < 5; ++g) {
    const ChannelGroup& cg = maps.groups[g];
    arrs[g]->assign(static_cast<std::size_t>(cg.channels) * plan.total_slots, 0.0);
    for (uint32_t slot = 0; slot < plan.total_slots; ++slot)
      for (int c = 0; c < cg.channels; ++c) {
        uint16_t q = cg.samples[static_cast<std::size_t>(c) * grid + slot];
        double lo = cg.lo[c], hi = cg.hi[c];
        (*arrs[g])[slot * static_cast<std::size_t>(cg.channels) + c] =
            lo + (hi - lo) * (q / 65535.0);
      }
  }
  return out;
}

GaussianSet decoded_set(const AttributeMaps& maps, const LayoutPlan& plan,
                        const Glut& glut) {
  UnpackedFrame un = unpack_frame(maps, plan);
  GaussianSet set;
  set.sh_degree = maps.sh_degree;
  int shp = set.sh_per_gaussian();
  std::vector<uint32_t> live;
  for (const auto& e : glut.entries)
    if (e.alive_at(maps.frame)) live.push_back(e.id);
  std::sort(live.begin(), live.end());
  for (uint32_t id : live) {
    uint32_t slot = plan.slot_of(id);
    if (slot == kInvalidId)
      throw invalid_input("decoded_set: live id " + std::to_string(id) +
                          " has no slot");
    std::size_t i = set.append(id);
    for (int a = 0; a < 3; ++a) set.pos[3 * i + a] = un.pos[3 * slot + a];
    for (int a = 0; a < 4; ++a) set.rot[4 * i + a] = un.rot[4 * slot + a];
    for (int a = 0; a < 3; ++a) set.log_scale[3 * i + a] = un.log_scale[3 * slot + a];
    set.opacity[i] = un.opacity[slot];
    std::copy_n(&un.sh[static_cast<std::size_t>(shp) * slot], shp,
                &set.sh[static_cast<std::size_t>(shp) * i]);
  }
  set.renormalize_rotations();
  return set;
}

// ------------------------------------------------------------- file io ----

void write_maps(const std::string& path, const AttributeMaps& maps) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw format_error("write_maps: cannot open " + path);
  auto u32 = [&](uint32_t v) { os.write(reinterpret_cast<char*>(&v), 4); };
  auto u64 = [&](uint64_t v) { os.write(reinterpret_cast<char*>(&v), 8); };
  auto f64 = [&](double v) { os.write(reinterpret_cast<char*>(&v), 8); };
  os.write("TGM1", 4);
  u64(maps.plan_hash);
  u32(maps.frame);
  u32(static_cast<uint32_t>(maps.rows));
  u32(static_cast<uint32_t>(maps.cols));
  u32(static_cast<uint32_t>(maps.sh_degree));
  u32(static_cast<uint32_t>(maps.groups.size()));
  for (const auto& g : maps.groups) {
    u32(static_cast<uint32_t>(g.name.size()));
    os.write(g.name.data(), static_cast<std::streamsize>(g.name.size()));
    u32(static_cast<uint32_t>(g.channels));
    for (int c = 0; c < g.channels; ++c) {
      f64(g.lo[c]);
      f64(g.hi[c]);
    }
    os.write(reinterpret_cast<const char*>(g.samples.data()),
             static_cast<std::streamsize>(g.samples.size() * 2));
  }
  if (!os) throw format_error("write_maps: write failed for " + path);
}

AttributeMaps read_maps(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw format_error("read_maps: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "TGM1", 4) != 0)
    throw format_error("read_maps: bad magic in " + path);
  auto u32 = [&] { uint32_t v; is.read(reinterpret_cast<char*>(&v), 4); return v; };
  auto u64 = [&] { uint64_t v; is.read(reinterpret_cast<char*>(&v), 8); return v; };
  auto f64 = [&] { double v; is.read(reinterpret_cast<char*>(&v), 8); return v; };
  AttributeMaps maps;
  maps.plan_hash = u64();
  maps.frame = u32();
  maps.rows = static_cast<int>(u32());
  maps.cols = static_cast<int>(u32());
  maps.sh_degree = static_cast<int>(u32());
  uint32_t groups = u32();
  std::size_t grid = static_cast<std::size_t>(maps.rows) * maps.cols;
  for (uint32_t g = 0; g < groups; ++g) {
    ChannelGroup cg;
    uint32_t len = u32();
    cg.name.resize(len);
    is.read(cg.name.data(), len);
    cg.channels = static_cast<int>(u32());
    cg.lo.resize(cg.channels);
    cg.hi.resize(cg.channels);
    for (int c = 0; c < cg.channels; ++c) {
      cg.lo[c] = f64();
      cg.hi[c] = f64();
    }
    cg.samples.resize(static_cast<std::size_t>(cg.channels) * grid);
    is.read(reinterpret_cast<char*>(cg.samples.data()),
            static_cast<std::streamsize>(cg.samples.size() * 2));
    maps.groups.push_back(std::move(cg));
  }
  if (!is) throw format_error("read_maps: truncated file " + path);
  return maps;
}

}  // namespace tgs
