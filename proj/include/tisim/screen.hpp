#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tisim/quantum.hpp"

namespace tisim {

/// Two point slits at x = -d/2 (first state channel) and x = +d/2 (second),
/// a screen at distance L, and `bins` bin centres spread uniformly over a
/// width `span` centred on the axis. Phases are e^{i 2 pi r / lambda}; the 1/r
/// falloff is neglected.
struct ScreenModel {
  double slit_separation = 10.0;
  double wavelength = 1.0;
  double screen_distance = 1000.0;
  std::size_t bins = 201;
  double span = 500.0;

  /// d = 10 lambda, L = 1000 lambda, 201 bins over the central five fringes
  /// (fringe spacing lambda L / d).
  static ScreenModel default_geometry();

  /// Throws SimError naming the violated constraint.
  void validate() const;

  double bin_center(std::size_t k) const;
  double path_length(std::size_t slit, double x) const;  // slit 0 or 1
  std::string bin_label(std::size_t k) const;            // "bin000" ...

  bool operator==(const ScreenModel&) const = default;
};

/// Amplitude at each bin for slit amplitudes (a0, a1), normalised over the
/// bins so that the squared norm equals |a0|^2 + |a1|^2.
std::vector<Amplitude> propagate_to_screen(const ScreenModel& m, Amplitude a0, Amplitude a1);

struct ScreenDistribution {
  std::vector<double> interference;  // |e^{i k r_A} + e^{i k r_B}|^2, normalised
  std::vector<double> which_slit;    // |e^{i k r_A}|^2 + |e^{i k r_B}|^2, normalised
};

ScreenDistribution screen_distribution(const ScreenModel& m);

}  // namespace tisim
