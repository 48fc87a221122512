#pragma once

#include "tgs/image.hpp"

namespace tgs {

constexpr double kPsnrCap = 99.0;  // reported for identical images

// 10 log10(1 / MSE) on [0,1] images, capped at kPsnrCap dB.
double psnr(const Image& a, const Image& b);

// Mean SSIM, 11-tap Gaussian window, standard constants.
double ssim(const Image& a, const Image& b);

}  // namespace tgs
