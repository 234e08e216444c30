#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmcyto/image.hpp"
#include "mmcyto/transform.hpp"

namespace mmcyto {

struct PhantomSpec {
  int n_nuclei = 40;
  int slide_px = 1024;
  RigidTransform2D transform{0.087266462599716474, 12.0, -7.0, 1.472};  // 5 degrees
  /// Bound on the per-nucleus FL displacement (fixed-frame px).
  double jitter_px = 0.0;
  double class_effect = 0.0;
  bool positive = false;
  int bf_levels = 11;
  double bf_z_step_um = 0.4;
  int fl_levels = 5;
  double fl_z_step_um = 1.0;
  double bf_pixel_um = 0.23;
  /// FL slide side in FL pixels; 0 covers the same physical extent as BF.
  int fl_slide_px = 0;
  double nucleus_radius_px = 10.0;
  /// Amplitude of the additive low-frequency FL background.
  double bias_strength = 0.3;
  double noise_sigma = 0.004;
  std::string slide_id = "phantom";
  std::string patient_id = "P0";
};

struct PhantomNucleus {
  double x_px = 0.0;  // BF frame
  double y_px = 0.0;
  int sharp_bf = 0;
  int sharp_fl = 0;
  /// Displacement of this nucleus in FL relative to the rigid mapping,
  /// expressed in BF pixels: the FL content sits at transform(x + dx, y + dy).
  double residual_dx = 0.0;
  double residual_dy = 0.0;
  double radius_px = 0.0;
};

struct PhantomTruth {
  std::uint64_t seed = 0;
  PhantomSpec spec;
  std::vector<PhantomNucleus> nuclei;  // those inside the BF slide
};

struct Phantom {
  ZStack bf;
  ZStack fl;
  PhantomTruth truth;
};

/// Slide pair with known pose. Cells are soft-edged ellipses rendered
/// analytically; each level blurs a cell by its distance from the cell's
/// sharp plane. Output depends only on seed and spec.
Phantom synth_phantom(std::uint64_t seed, const PhantomSpec& spec);

/// Deterministic 64-bit mixer used to derive independent streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

}  // namespace mmcyto
