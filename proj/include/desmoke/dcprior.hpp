#pragma once

#include "desmoke/image.hpp"

namespace desmoke {

struct DarkChannelParams {
  int kernel_size = 15;  // side of the square window, odd, >= 1
};

struct GuidedFilterParams {
  int radius = 20;         // window side = 2*radius+1
  float epsilon = 1e-3f;   // smoothness regularizer, > 0
};

// Windowed per-channel minimum with replicated borders. Separable two-pass
// min over the per-pixel channel minimum; bit-equal to the nested brute force.
Plane dark_channel(const ImageRgb& img, const DarkChannelParams& params);

// Local linear model out = mean(a)*guide + mean(b) with a,b from the window
// mean/variance of guide and the window mean of p. Box filters replicate edges.
Plane guided_filter(const Plane& guide, const Plane& p, const GuidedFilterParams& params);

// guided_filter(gray_mean(img), dark_channel(img)), clamped to [0,1].
Plane refined_dark_channel(const ImageRgb& img, const DarkChannelParams& dcp,
                           const GuidedFilterParams& gfp);

// The 4-channel network input: img with its refined dark channel embedded.
ImageStack4 prepare_input(const ImageRgb& img, const DarkChannelParams& dcp,
                          const GuidedFilterParams& gfp);

// Window mean with replicated borders; |window| = (2r+1)^2 everywhere.
Plane box_mean(const Plane& img, int radius);

}  // namespace desmoke
