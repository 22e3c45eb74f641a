#pragma once

#include <array>
#include <string>
#include <string_view>

#include "tisim/quantum.hpp"

namespace tisim::qubit {

// Qubit states are expressed over the z basis {"+z", "-z"}.

const std::vector<ChannelLabel>& z_basis();

/// One of "+z", "-z", "+x", "-x", "+y", "-y".
StateVector named_state(std::string_view name);

/// Parses a named state, or an explicit "re0,im0,re1,im1" amplitude list.
StateVector parse_state(std::string_view text);

/// Eigenstates of the spin component along `axis` ("x", "y" or "z"), "+" first.
std::array<StateVector, 2> eigenbasis(std::string_view axis);

/// {s, s_perp} for a normalised qubit state s.
std::array<StateVector, 2> basis_containing(const StateVector& s);

/// A measurement basis represented in its own labels, with both states of the
/// ensemble rewritten in that basis, ready for abl_probability.
struct MeasurementFrame {
  Observable observable;
  PrePostEnsemble ensemble;
};

/// Rewrite a z-basis pre/post pair in the eigenbasis `basis`, labelled `labels`.
MeasurementFrame frame(const StateVector& pre, const StateVector& post,
                       const std::array<StateVector, 2>& basis,
                       std::array<std::string, 2> labels);

/// ABL probability for measuring spin along `axis` ("x", "y", "z") between
/// pre- and post-selection; `outcome` is "+<axis>" or "-<axis>".
double abl_spin(const StateVector& pre, const StateVector& post, std::string_view axis,
                std::string_view outcome);

}  // namespace tisim::qubit
