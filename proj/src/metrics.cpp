#include "tgs/metrics.hpp"

#include <cmath>

#include "tgs/energy.hpp"
#include "tgs/parallel.hpp"

namespace tgs {

double psnr(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw invalid_input("psnr: resolution mismatch");
  double mse = reduce_sum(a.data.size(), [&](std::size_t i) {
                 double d = a.data[i] - b.data[i];
                 return d * d;
               }) /
               a.data.size();
  if (mse <= 0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& a, const Image& b) { return ssim_mean(a, b); }

}  // namespace tgs
