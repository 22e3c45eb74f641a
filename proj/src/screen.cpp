#include "tisim/screen.hpp"

#include <cmath>
#include <numbers>

namespace tisim {

ScreenModel ScreenModel::default_geometry() {
  ScreenModel m;
  m.wavelength = 1.0;
  m.slit_separation = 10.0;
  m.screen_distance = 1000.0;
  m.bins = 201;
  m.span = 5.0 * m.wavelength * m.screen_distance / m.slit_separation;
  return m;
}

void ScreenModel::validate() const {
  if (!(slit_separation > 0.0) || !std::isfinite(slit_separation)) throw SimError("screen: d must be > 0");
  if (!(wavelength > 0.0) || !std::isfinite(wavelength)) throw SimError("screen: lambda must be > 0");
  if (!(screen_distance > 0.0) || !std::isfinite(screen_distance)) throw SimError("screen: L must be > 0");
  if (!(span > 0.0) || !std::isfinite(span)) throw SimError("screen: span must be > 0");
  if (bins < 3 || bins % 2 == 0) throw SimError("screen: bins must be odd and >= 3");
}

double ScreenModel::bin_center(std::size_t k) const {
  const double width = span / static_cast<double>(bins);
  return (static_cast<double>(k) - static_cast<double>(bins - 1) / 2.0) * width;
}

double ScreenModel::path_length(std::size_t slit, double x) const {
  const double slit_x = slit == 0 ? -slit_separation / 2.0 : slit_separation / 2.0;
  return std::hypot(screen_distance, x - slit_x);
}

std::string ScreenModel::bin_label(std::size_t k) const {
  const std::size_t width = std::to_string(bins - 1).size();
  std::string digits = std::to_string(k);
  return "bin" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

namespace {

Amplitude phase(const ScreenModel& m, double r) {
  const double arg = 2.0 * std::numbers::pi * (std::fmod(r, m.wavelength) / m.wavelength);
  return std::polar(1.0, arg);
}

std::vector<double> normalised(std::vector<double> w) {
  double total = 0.0;
  for (double v : w) total += v;
  if (!(total > 0.0)) throw SimError("screen distribution has zero total mass");
  for (double& v : w) v /= total;
  return w;
}

}  // namespace

std::vector<Amplitude> propagate_to_screen(const ScreenModel& m, Amplitude a0, Amplitude a1) {
  m.validate();
  std::vector<Amplitude> out(m.bins);
  double total = 0.0;
  for (std::size_t k = 0; k < m.bins; ++k) {
    const double x = m.bin_center(k);
    out[k] = a0 * phase(m, m.path_length(0, x)) + a1 * phase(m, m.path_length(1, x));
    total += std::norm(out[k]);
  }
  if (!(total > 0.0)) throw SimError("screen distribution has zero total mass");
  const double scale = std::sqrt((std::norm(a0) + std::norm(a1)) / total);
  for (auto& a : out) a *= scale;
  return out;
}

ScreenDistribution screen_distribution(const ScreenModel& m) {
  m.validate();
  std::vector<double> interference(m.bins);
  std::vector<double> which(m.bins);
  for (std::size_t k = 0; k < m.bins; ++k) {
    const double x = m.bin_center(k);
    const Amplitude pa = phase(m, m.path_length(0, x));
    const Amplitude pb = phase(m, m.path_length(1, x));
    interference[k] = std::norm(pa + pb);
    which[k] = std::norm(pa) + std::norm(pb);
  }
  return {normalised(std::move(interference)), normalised(std::move(which))};
}

}  // namespace tisim
