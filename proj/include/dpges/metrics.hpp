#pragma once

#include "dpges/core.hpp"

namespace dpges {

// 10 log10(1 / MSE) for unit-range images; +infinity when identical.
double psnr(const ColorImageT<double>& a, const ColorImageT<double>& b);

// Same SSIM convention as the photometric loss (11x11 Gaussian window).
double ssim(const ColorImageT<double>& a, const ColorImageT<double>& b);

}  // namespace dpges
