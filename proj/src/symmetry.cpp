#include "scarbasis/symmetry.hpp"

#include <stdexcept>

namespace scarbasis {

std::string_view to_string(Irrep irrep) {
  switch (irrep) {
    case Irrep::A1: return "A1";
    case Irrep::A2: return "A2";
    case Irrep::B1: return "B1";
    case Irrep::B2: return "B2";
    case Irrep::E1: return "E1";
    case Irrep::E2: return "E2";
  }
  return "?";
}

std::optional<Irrep> try_parse_irrep(std::string_view tag) {
  if (tag == "A1") return Irrep::A1;
  if (tag == "A2") return Irrep::A2;
  if (tag == "B1") return Irrep::B1;
  if (tag == "B2") return Irrep::B2;
  if (tag == "E1" || tag == "E") return Irrep::E1;
  if (tag == "E2") return Irrep::E2;
  return std::nullopt;
}

Irrep parse_irrep(std::string_view tag) {
  if (auto r = try_parse_irrep(tag)) return *r;
  throw std::invalid_argument("unknown irreducible representation '" + std::string(tag) + "'");
}

Eigen::Matrix2d matrix_of(GroupElement g) {
  Eigen::Matrix2d m;
  switch (g) {
    case GroupElement::Identity: m << 1, 0, 0, 1; break;
    case GroupElement::Rot90: m << 0, -1, 1, 0; break;
    case GroupElement::Rot180: m << -1, 0, 0, -1; break;
    case GroupElement::Rot270: m << 0, 1, -1, 0; break;
    case GroupElement::ReflectX: m << 1, 0, 0, -1; break;
    case GroupElement::ReflectY: m << -1, 0, 0, 1; break;
    case GroupElement::ReflectDiag: m << 0, 1, 1, 0; break;
    case GroupElement::ReflectAntiDiag: m << 0, -1, -1, 0; break;
  }
  return m;
}

PhaseSpaceState apply(GroupElement g, const PhaseSpaceState& s) {
  const Eigen::Matrix2d m = matrix_of(g);
  const Eigen::Vector2d q = m * Eigen::Vector2d(s.x, s.y);
  const Eigen::Vector2d p = m * Eigen::Vector2d(s.px, s.py);
  return {q.x(), q.y(), p.x(), p.y()};
}

double character(Irrep irrep, GroupElement g) {
  using G = GroupElement;
  const bool quarter_turn = g == G::Rot90 || g == G::Rot270;
  const bool axis_mirror = g == G::ReflectX || g == G::ReflectY;
  const bool diag_mirror = g == G::ReflectDiag || g == G::ReflectAntiDiag;
  switch (irrep) {
    case Irrep::A1: return 1.0;
    case Irrep::A2: return (axis_mirror || diag_mirror) ? -1.0 : 1.0;
    case Irrep::B1: return (quarter_turn || diag_mirror) ? -1.0 : 1.0;
    case Irrep::B2: return (quarter_turn || axis_mirror) ? -1.0 : 1.0;
    case Irrep::E1:
    case Irrep::E2: {
      if (quarter_turn || diag_mirror) return 0.0;
      if (g == G::Identity) return 1.0;
      if (g == G::Rot180) return -1.0;
      // E1: even under y -> -y, odd under x -> -x; E2 the opposite.
      const bool even = (irrep == Irrep::E1) == (g == G::ReflectX);
      return even ? 1.0 : -1.0;
    }
  }
  throw std::logic_error("character: unreachable");
}

}  // namespace scarbasis
