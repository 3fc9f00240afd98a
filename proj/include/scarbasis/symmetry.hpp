// C4v point group of the quartic oscillator and its irreducible representations.
#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "scarbasis/hamiltonian.hpp"

namespace scarbasis {

/// Irreducible representations. E1/E2 are the two rows of E: E1 is odd in x and
/// even in y, E2 even in x and odd in y.
enum class Irrep { A1, A2, B1, B2, E1, E2 };

inline constexpr std::array<Irrep, 6> kAllIrreps = {Irrep::A1, Irrep::A2, Irrep::B1,
                                                    Irrep::B2, Irrep::E1, Irrep::E2};

std::string_view to_string(Irrep irrep);
Irrep parse_irrep(std::string_view tag);  // accepts "E" as E1
std::optional<Irrep> try_parse_irrep(std::string_view tag);

inline int dimensionality(Irrep irrep) { return (irrep == Irrep::E1 || irrep == Irrep::E2) ? 2 : 1; }
inline bool is_two_dimensional(Irrep irrep) { return dimensionality(irrep) == 2; }

/// Group elements, acting on the plane as orthogonal 2x2 matrices.
enum class GroupElement { Identity, Rot90, Rot180, Rot270, ReflectX, ReflectY, ReflectDiag, ReflectAntiDiag };

inline constexpr std::array<GroupElement, 8> kGroupElements = {
    GroupElement::Identity, GroupElement::Rot90,    GroupElement::Rot180,      GroupElement::Rot270,
    GroupElement::ReflectX, GroupElement::ReflectY, GroupElement::ReflectDiag, GroupElement::ReflectAntiDiag};

/// ReflectX maps (x, y) -> (x, -y) (mirror in the x axis); ReflectDiag swaps x and y.
Eigen::Matrix2d matrix_of(GroupElement g);

/// Applies g to positions and momenta alike.
PhaseSpaceState apply(GroupElement g, const PhaseSpaceState& s);

/// Character of g in a one-dimensional irrep. For E1/E2 the value returned is
/// the eigenvalue of g on that row when g maps the row to itself, 0 otherwise.
double character(Irrep irrep, GroupElement g);

}  // namespace scarbasis
