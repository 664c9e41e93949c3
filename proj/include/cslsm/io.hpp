#pragma once

#include <string>

#include "cslsm/volume.hpp"

// Bit-exact binary file formats. All multi-byte integers and floats are
// little-endian regardless of host order.
//
//   CSLV  volume        magic "CSLV", version 0x01, nx ny nz u32,
//                       then nx*ny*nz float32 voxels slice-major.
//   CSLM  mask set      magic "CSLM", version 0x01, R nx ny u32, seed u64,
//                       then R*nx*ny bytes, each 0x00 or 0x01.
//   CSLB  measurements  magic "CSLB", version 0x01, N nx ny R u32,
//                       noise_variance f64, noise_seed u64, mask_seed u64,
//                       then N*nx*ny float32 values.
//
// Readers validate the magic, the version, and that the payload length
// matches the header exactly; any mismatch is rejected.

namespace cslsm {

void write_volume(const Volume& v, const std::string& path);
Volume read_volume(const std::string& path);

void write_masks(const MaskSet& m, const std::string& path);
MaskSet read_masks(const std::string& path);

void write_measurements(const MeasurementSet& ms, const std::string& path);
MeasurementSet read_measurements(const std::string& path);

/// Binary PGM (P5), maxval 65535, big-endian samples.
/// Intensity mapping: sample = round(clamp(value, 0, 1) * 65535).
void export_slice_pgm(const Slice& s, const std::string& path);

} // namespace cslsm
