#include "vip/metrics.hpp"

#include <cmath>
#include <cstdio>

namespace vip {

namespace {

constexpr Index kWindow = 11;
constexpr double kWindowSigma = 1.5;

Eigen::ArrayXd gaussian_taps(Index size) {
  Eigen::ArrayXd g(size);
  const double c = 0.5 * static_cast<double>(size - 1);
  for (Index i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - c;
    g[i] = std::exp(-d * d / (2.0 * kWindowSigma * kWindowSigma));
  }
  return g / g.sum();
}

// Separable "valid" correlation with a 1-D kernel along rows then columns.
Plane<double> filter_valid(const Plane<double>& x, const Eigen::ArrayXd& g) {
  const Index k = g.size();
  const Index out_r = x.rows() - k + 1;
  const Index out_c = x.cols() - k + 1;
  Plane<double> tmp = Plane<double>::Zero(x.rows(), out_c);
  for (Index j = 0; j < out_c; ++j) {
    for (Index t = 0; t < k; ++t) {
      tmp.col(j) += g[t] * x.col(j + t);
    }
  }
  Plane<double> out = Plane<double>::Zero(out_r, out_c);
  for (Index i = 0; i < out_r; ++i) {
    for (Index t = 0; t < k; ++t) {
      out.row(i) += g[t] * tmp.row(i + t);
    }
  }
  return out;
}

double ssim_stat(double mu_a, double mu_b, double var_a, double var_b, double cov, double c1,
                 double c2) {
  return ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
         ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
}

void require_same_dims(const Plane<float>& a, const Plane<float>& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

// Zero or negative peaks would zero the stabilizers; fall back to unit range.
double usable_peak(double peak) { return peak > 0.0 && std::isfinite(peak) ? peak : 1.0; }

}  // namespace

std::string MetricReport::row(Index channel) const {
  const auto& m = channels.at(static_cast<std::size_t>(channel));
  char buf[96];
  if (std::isinf(m.psnr)) {
    std::snprintf(buf, sizeof buf, "inf/%.4f/%.3f", m.ssim, m.mse * 1e3);
  } else {
    std::snprintf(buf, sizeof buf, "%.2f/%.4f/%.3f", m.psnr, m.ssim, m.mse * 1e3);
  }
  return buf;
}

double mse(const Plane<float>& a, const Plane<float>& b) {
  require_same_dims(a, b, "mse");
  if (a.size() == 0) {
    throw ShapeError("mse: empty images");
  }
  return (a.cast<double>() - b.cast<double>()).square().mean();
}

double psnr_from_mse(double mse, double peak) {
  if (mse == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Plane<float>& a, const Plane<float>& b, double peak) {
  require_same_dims(a, b, "ssim");
  if (a.size() == 0) {
    throw ShapeError("ssim: empty images");
  }
  peak = usable_peak(peak);
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const Plane<double> x = a.cast<double>();
  const Plane<double> y = b.cast<double>();
  if (a.rows() < kWindow || a.cols() < kWindow) {
    const double mx = x.mean();
    const double my = y.mean();
    return ssim_stat(mx, my, (x - mx).square().mean(), (y - my).square().mean(),
                     ((x - mx) * (y - my)).mean(), c1, c2);
  }
  const Eigen::ArrayXd g = gaussian_taps(kWindow);
  const Plane<double> mx = filter_valid(x, g);
  const Plane<double> my = filter_valid(y, g);
  const Plane<double> sxx = filter_valid(x * x, g) - mx * mx;
  const Plane<double> syy = filter_valid(y * y, g) - my * my;
  const Plane<double> sxy = filter_valid(x * y, g) - mx * my;
  const Plane<double> map = ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) /
                            ((mx * mx + my * my + c1) * (sxx + syy + c2));
  return map.mean();
}

Plane<double> region_ssim(const Plane<float>& a, const Plane<float>& b, Index block_size,
                          double peak) {
  require_same_dims(a, b, "region_ssim");
  if (block_size < 1) {
    throw ArgumentError("region_ssim: block size must be >= 1");
  }
  if (block_size > a.rows() || block_size > a.cols()) {
    throw ArgumentError("region_ssim: block " + std::to_string(block_size) +
                        " larger than image " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()));
  }
  if (std::isnan(peak)) {
    peak = a.maxCoeff();
  }
  peak = usable_peak(peak);
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const Index br = (a.rows() + block_size - 1) / block_size;
  const Index bc = (a.cols() + block_size - 1) / block_size;
  Plane<double> out(br, bc);
  const Index n = block_size * block_size;
  for (Index i = 0; i < br; ++i) {
    for (Index j = 0; j < bc; ++j) {
      Eigen::ArrayXd x(n);
      Eigen::ArrayXd y(n);
      for (Index u = 0; u < block_size; ++u) {
        const Index r = std::min(i * block_size + u, a.rows() - 1);
        for (Index v = 0; v < block_size; ++v) {
          const Index c = std::min(j * block_size + v, a.cols() - 1);
          x[u * block_size + v] = a(r, c);
          y[u * block_size + v] = b(r, c);
        }
      }
      const double mx = x.mean();
      const double my = y.mean();
      out(i, j) = ssim_stat(mx, my, (x - mx).square().mean(), (y - my).square().mean(),
                            ((x - mx) * (y - my)).mean(), c1, c2);
    }
  }
  return out;
}

ImageTensor make_reference(const ImageTensor& ground_truth, const FanGeometry& geom) {
  return fbp(forward_project(ground_truth, geom), geom);
}

MetricReport evaluate(const ImageTensor& recon, const ImageTensor& reference) {
  require_same_shape(recon, reference, "evaluate");
  MetricReport report;
  for (Index c = 0; c < reference.channels(); ++c) {
    const Plane<float> r = reference.channel(c);
    const Plane<float> x = recon.channel(c);
    const double peak = r.maxCoeff();
    ChannelMetrics m;
    m.mse = mse(x, r);
    m.psnr = psnr_from_mse(m.mse, peak);
    m.ssim = ssim(x, r, peak);
    report.channels.push_back(m);
  }
  return report;
}

}  // namespace vip
