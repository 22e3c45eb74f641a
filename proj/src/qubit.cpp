#include "tisim/qubit.hpp"

#include <charconv>
#include <cmath>
#include <vector>

namespace tisim::qubit {

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

StateVector z_state(Amplitude up, Amplitude down) { return StateVector(z_basis(), {up, down}); }

}  // namespace

const std::vector<ChannelLabel>& z_basis() {
  static const std::vector<ChannelLabel> basis{"+z", "-z"};
  return basis;
}

StateVector named_state(std::string_view name) {
  const Amplitude i(0.0, 1.0);
  if (name == "+z") return z_state(1.0, 0.0);
  if (name == "-z") return z_state(0.0, 1.0);
  if (name == "+x") return z_state(kInvSqrt2, kInvSqrt2);
  if (name == "-x") return z_state(kInvSqrt2, -kInvSqrt2);
  if (name == "+y") return z_state(kInvSqrt2, i * kInvSqrt2);
  if (name == "-y") return z_state(kInvSqrt2, -i * kInvSqrt2);
  throw SimError("unknown qubit state '" + std::string(name) + "'");
}

StateVector parse_state(std::string_view text) {
  if (text.size() == 2 && (text[0] == '+' || text[0] == '-')) return named_state(text);
  std::vector<double> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(',', start), text.size());
    const auto token = text.substr(start, end - start);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
      throw SimError("cannot parse qubit state '" + std::string(text) + "'");
    }
    parts.push_back(value);
    start = end + 1;
  }
  if (parts.size() != 4) {
    throw SimError("qubit state needs 4 numbers (re0,im0,re1,im1), got " + std::to_string(parts.size()));
  }
  return normalize(z_state({parts[0], parts[1]}, {parts[2], parts[3]}));
}

std::array<StateVector, 2> eigenbasis(std::string_view axis) {
  if (axis == "z") return {named_state("+z"), named_state("-z")};
  if (axis == "x") return {named_state("+x"), named_state("-x")};
  if (axis == "y") return {named_state("+y"), named_state("-y")};
  throw SimError("unknown observable '" + std::string(axis) + "' (expected x, y or z)");
}

std::array<StateVector, 2> basis_containing(const StateVector& s) {
  const StateVector n = normalize(s);
  const auto& a = n.amplitudes();
  // (-conj(b), conj(a)) is orthogonal to (a, b).
  return {n, z_state(-std::conj(a[1]), std::conj(a[0]))};
}

MeasurementFrame frame(const StateVector& pre, const StateVector& post,
                       const std::array<StateVector, 2>& basis,
                       std::array<std::string, 2> labels) {
  std::vector<ChannelLabel> names{labels[0], labels[1]};
  StateVector pre_in = change_basis(pre, basis, names);
  StateVector post_in = change_basis(post, basis, names);
  return {Observable::finest(names), PrePostEnsemble(std::move(pre_in), std::move(post_in))};
}

double abl_spin(const StateVector& pre, const StateVector& post, std::string_view axis,
                std::string_view outcome) {
  const std::string a(axis);
  const auto f = frame(pre, post, eigenbasis(axis), {"+" + a, "-" + a});
  return abl_probability(f.ensemble, f.observable, outcome);
}

}  // namespace tisim::qubit
