#pragma once

#include <string>
#include <vector>

#include "ibplab/paths.hpp"
#include "ibplab/types.hpp"

namespace ibplab {

/// Outer functions g(u_1..u_m) with analytic gradients and Hessians:
///   linear : sum u_p              product : prod u_p
///   sin    : sin(sum u_p)         cos     : cos(sum u_p)
///   gauss  : exp(-|u|^2 / 2)
/// sin/cos/gauss are bounded with bounded derivatives.
enum class OuterKind { linear, product, sine, cosine, gauss };

OuterKind outer_kind_from_string(const std::string& s);
std::string to_string(OuterKind k);

/// Cylinder test function f(x) = g(<x, v_1>, .., <x, v_m>). For segment
/// arguments the projections carry grid node offsets: f(xi) =
/// g(<xi(theta_1), v_1>, ..) with theta snapped to the segment grid.
class CylinderFunction {
 public:
  /// State-space function; projections are the columns of V.
  CylinderFunction(OuterKind kind, Matrix projections, std::string name = "");
  /// Segment function; theta_p in [-tau, 0] must align with the grid when
  /// evaluated.
  CylinderFunction(OuterKind kind, std::vector<std::pair<double, Vector>> segment_projections,
                   std::string name = "");

  double eval(const Vector& x) const;
  /// Directional derivative along k.
  double dderiv(const Vector& x, const Vector& k) const;
  /// Second directional derivative along k.
  double dderiv2(const Vector& x, const Vector& k) const;

  double eval_segment(const SegmentView& xi, double tau) const;
  /// Direction given as a segment table on the same grid.
  double dderiv_segment(const SegmentView& xi, const SegmentView& dir, double tau) const;

  bool is_segment_function() const { return segment_; }
  bool bounded() const;
  const std::string& name() const { return name_; }

 private:
  Vector project(const Vector& x) const;
  Vector project_segment(const SegmentView& xi, double tau) const;

  double outer(const Vector& u) const;
  Vector outer_grad(const Vector& u) const;
  Matrix outer_hess(const Vector& u) const;

  OuterKind kind_;
  bool segment_ = false;
  Matrix projections_;                                   // state version
  std::vector<std::pair<double, Vector>> seg_projections_;  // segment version
  std::string name_;
};

/// Dictionary used by the verification runs: one bounded function per outer
/// kind over simple projections.
std::vector<CylinderFunction> default_dictionary(Index n);
std::vector<CylinderFunction> default_segment_dictionary(Index n, double tau);

}  // namespace ibplab
