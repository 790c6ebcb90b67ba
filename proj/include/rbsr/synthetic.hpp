#pragma once

#include <cstdint>

#include "rbsr/imageio.hpp"

namespace rbsr {

/// Seeded RGB "dead leaves" image: opaque discs with power-law radii and
/// gently shaded colours, stacked until the canvas is covered. Edges are
/// 2x2 supersampled. Values stay in [0.02, 0.98].
ImageTensor synthetic_image(int height, int width, std::uint64_t seed);

}  // namespace rbsr
