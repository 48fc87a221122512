#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tgs/packing.hpp"

namespace tgs {

// Predictive coder over attribute-map sequences. I-frames predict each
// sample from max(left, top) of the reconstructed neighbors; P-frames
// predict from the same slot in the previously reconstructed frame.
// Residuals are quantized with step 2^(qp/6) (qp 0 = lossless after the
// 16-bit map quantization) and entropy-coded with an adaptive binary range
// coder whose significance contexts condition on already-coded neighbors.
// All references are reconstructed values, so encoder and decoder stay
// bit-identical at every qp.

struct EncodedStream {
  std::vector<uint8_t> bytes;
};

struct CodecResult {
  std::vector<AttributeMaps> reconstructed;  // encoder-side reconstruction
};

double qp_step(int qp);

// All frames must share the plan (hash checked). gop is the I-frame period.
EncodedStream encode(const std::vector<AttributeMaps>& frames, const Glut& glut,
                     int qp, int gop, CodecResult* result = nullptr);

struct DecodedStream {
  std::vector<AttributeMaps> frames;
  Glut glut;
  int qp = 0, gop = 0;
  uint64_t plan_hash = 0;
};

DecodedStream decode(const EncodedStream& stream);
DecodedStream decode_file(const std::string& path);

void write_stream(const std::string& path, const EncodedStream& stream);
EncodedStream read_stream(const std::string& path);

// One 16-bit grayscale raster per (frame, channel group); the group's
// channel planes are stacked vertically (height = rows * channels). Round
// trips losslessly together with rasters_meta.json.
void export_rasters(const std::vector<AttributeMaps>& frames, const std::string& dir);
std::vector<AttributeMaps> import_rasters(const std::string& dir);

}  // namespace tgs
