#include "dpges/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "dpges/losses.hpp"

namespace dpges {

double psnr(const ColorImageT<double>& a, const ColorImageT<double>& b) {
  if (a.width != b.width || a.height != b.height)
    throw std::invalid_argument("psnr: image dimensions mismatch");
  double mse = 0;
  for (int i = 0; i < a.count(); ++i) mse += (a.pixels[i] - b.pixels[i]).squaredNorm();
  mse /= 3.0 * a.count();
  if (mse == 0) return infinity<double>();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const ColorImageT<double>& a, const ColorImageT<double>& b) {
  return ssim_mean(a, b);
}

}  // namespace dpges
