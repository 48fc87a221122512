#pragma once

#include <string>

#include "tgs/types.hpp"

namespace tgs {

struct AnchorLink;  // appearance.hpp

// Binary containers, all little-endian. Byte-exact layouts are documented in
// docs/FORMATS.md.

// GaussianSet <-> "TGS1": magic, count u32, sh_degree u32, global_ids u32[N],
// then float32 struct-of-arrays blocks: pos[3N], rot[4N] (w,x,y,z),
// log_scale[3N], opacity[N], sh[3*(deg+1)^2*N] band-major.
void write_gaussians(const std::string& path, const GaussianSet& set);
GaussianSet read_gaussians(const std::string& path);

// DeformGraph <-> "TGG1": magic, node count u32, k u32, influence_radius f64,
// per node: degree u32, neighbor u32[deg], weight f32[deg].
void write_graph(const std::string& path, const DeformGraph& graph);
DeformGraph read_graph(const std::string& path);

// Glut <-> "TGL1": magic, entry count u32, per entry: id u32, birth u32,
// death u32, origin u8, birth_position f32[3].
void write_glut(const std::string& path, const Glut& glut);
Glut read_glut(const std::string& path);

// Anchor links <-> "TGA1": magic, link count u32, K u32, per link:
// anchor_id u32, slot u32, local_offset f32[3], local_rotation f32[4] (w,x,y,z).
void write_links(const std::string& path, const std::vector<AnchorLink>& links, int k);
std::vector<AnchorLink> read_links(const std::string& path, int& k);

}  // namespace tgs
