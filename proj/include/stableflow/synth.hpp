#pragma once

#include <cstdint>
#include <string>

#include "stableflow/core.hpp"

namespace stableflow {

enum class SynthShape { SCurve, Sine, Spiral };

SynthShape parse_synth_shape(const std::string& name);

struct SynthOptions {
  SynthShape shape = SynthShape::SCurve;
  int count = 7;
  int points = 1000;
  double noise = 0.0;  // jitter std-dev as a fraction of each axis' extent
  std::uint64_t seed = 0;
};

/// Goal-directed planar demonstrations of roughly unit extent. Every
/// trajectory follows the same base curve at unit average speed and ends
/// exactly on the common goal; interior positions get i.i.d. Gaussian jitter
/// while velocities stay the analytic ones. Jitter is scaled per axis by the
/// curve's extent, so `noise` is in the units the data normalize to.
DemonstrationSet synthesize(const SynthOptions& options);

}  // namespace stableflow
