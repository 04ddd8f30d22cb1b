#include "ibplab/cylinder.hpp"

#include <cmath>

namespace ibplab {

OuterKind outer_kind_from_string(const std::string& s) {
  if (s == "linear") return OuterKind::linear;
  if (s == "product") return OuterKind::product;
  if (s == "sin") return OuterKind::sine;
  if (s == "cos") return OuterKind::cosine;
  if (s == "gauss") return OuterKind::gauss;
  throw ConfigError("unknown outer function: " + s);
}

std::string to_string(OuterKind k) {
  switch (k) {
    case OuterKind::linear: return "linear";
    case OuterKind::product: return "product";
    case OuterKind::sine: return "sin";
    case OuterKind::cosine: return "cos";
    case OuterKind::gauss: return "gauss";
  }
  return "?";
}

CylinderFunction::CylinderFunction(OuterKind kind, Matrix projections, std::string name)
    : kind_(kind), projections_(std::move(projections)), name_(std::move(name)) {
  if (projections_.cols() == 0) throw ConfigError("CylinderFunction: needs projections");
  if (name_.empty()) name_ = to_string(kind_);
}

CylinderFunction::CylinderFunction(OuterKind kind,
                                   std::vector<std::pair<double, Vector>> segment_projections,
                                   std::string name)
    : kind_(kind), segment_(true), seg_projections_(std::move(segment_projections)),
      name_(std::move(name)) {
  if (seg_projections_.empty()) throw ConfigError("CylinderFunction: needs projections");
  for (const auto& [theta, v] : seg_projections_) {
    if (theta > 0.0) throw ConfigError("CylinderFunction: segment offsets must be <= 0");
  }
  if (name_.empty()) name_ = to_string(kind_) + "@segment";
}

double CylinderFunction::outer(const Vector& u) const {
  switch (kind_) {
    case OuterKind::linear: return u.sum();
    case OuterKind::product: return u.prod();
    case OuterKind::sine: return std::sin(u.sum());
    case OuterKind::cosine: return std::cos(u.sum());
    case OuterKind::gauss: return std::exp(-0.5 * u.squaredNorm());
  }
  return 0.0;
}

Vector CylinderFunction::outer_grad(const Vector& u) const {
  const Index m = u.size();
  switch (kind_) {
    case OuterKind::linear: return Vector::Ones(m);
    case OuterKind::product: {
      Vector g(m);
      for (Index p = 0; p < m; ++p) {
        double prod = 1.0;
        for (Index q = 0; q < m; ++q) {
          if (q != p) prod *= u(q);
        }
        g(p) = prod;
      }
      return g;
    }
    case OuterKind::sine: return Vector::Constant(m, std::cos(u.sum()));
    case OuterKind::cosine: return Vector::Constant(m, -std::sin(u.sum()));
    case OuterKind::gauss: return (-std::exp(-0.5 * u.squaredNorm()) * u).eval();
  }
  return Vector::Zero(m);
}

Matrix CylinderFunction::outer_hess(const Vector& u) const {
  const Index m = u.size();
  switch (kind_) {
    case OuterKind::linear: return Matrix::Zero(m, m);
    case OuterKind::product: {
      Matrix h = Matrix::Zero(m, m);
      for (Index p = 0; p < m; ++p) {
        for (Index q = 0; q < m; ++q) {
          if (p == q) continue;
          double prod = 1.0;
          for (Index r = 0; r < m; ++r) {
            if (r != p && r != q) prod *= u(r);
          }
          h(p, q) = prod;
        }
      }
      return h;
    }
    case OuterKind::sine: return Matrix::Constant(m, m, -std::sin(u.sum()));
    case OuterKind::cosine: return Matrix::Constant(m, m, -std::cos(u.sum()));
    case OuterKind::gauss: {
      const double g = std::exp(-0.5 * u.squaredNorm());
      return (g * (u * u.transpose() - Matrix::Identity(m, m))).eval();
    }
  }
  return Matrix::Zero(m, m);
}

Vector CylinderFunction::project(const Vector& x) const {
  if (segment_) throw ConfigError("CylinderFunction: segment function used on a state");
  if (projections_.rows() != x.size()) throw ConfigError("CylinderFunction: dim mismatch");
  return projections_.transpose() * x;
}

Vector CylinderFunction::project_segment(const SegmentView& xi, double tau) const {
  if (!segment_) throw ConfigError("CylinderFunction: state function used on a segment");
  const Index m_nodes = xi.nodes() - 1;
  const double dth = tau / static_cast<double>(m_nodes);
  Vector u(static_cast<Index>(seg_projections_.size()));
  for (std::size_t p = 0; p < seg_projections_.size(); ++p) {
    const auto& [theta, v] = seg_projections_[p];
    const double pos = (theta + tau) / dth;
    const double rounded = std::round(pos);
    if (std::abs(pos - rounded) > 1e-9 * std::max(1.0, std::abs(pos))) {
      throw ConfigError("CylinderFunction: segment offset off the grid");
    }
    const Index l = static_cast<Index>(rounded);
    if (l < 0 || l > m_nodes) throw ConfigError("CylinderFunction: segment offset out of range");
    u(static_cast<Index>(p)) = v.dot(xi.at(l));
  }
  return u;
}

double CylinderFunction::eval(const Vector& x) const { return outer(project(x)); }

double CylinderFunction::dderiv(const Vector& x, const Vector& k) const {
  const Vector u = project(x);
  const Vector w = projections_.transpose() * k;
  return outer_grad(u).dot(w);
}

double CylinderFunction::dderiv2(const Vector& x, const Vector& k) const {
  const Vector u = project(x);
  const Vector w = projections_.transpose() * k;
  return w.dot(outer_hess(u) * w);
}

double CylinderFunction::eval_segment(const SegmentView& xi, double tau) const {
  return outer(project_segment(xi, tau));
}

double CylinderFunction::dderiv_segment(const SegmentView& xi, const SegmentView& dir,
                                        double tau) const {
  const Vector u = project_segment(xi, tau);
  const Vector w = project_segment(dir, tau);
  return outer_grad(u).dot(w);
}

bool CylinderFunction::bounded() const {
  return kind_ == OuterKind::sine || kind_ == OuterKind::cosine || kind_ == OuterKind::gauss;
}

std::vector<CylinderFunction> default_dictionary(Index n) {
  std::vector<CylinderFunction> dict;
  Vector v1(n), v2(n);
  for (Index i = 0; i < n; ++i) {
    v1(i) = 1.0 / std::sqrt(static_cast<double>(n)) * (i % 2 == 0 ? 1.0 : -0.5);
    v2(i) = 0.5 / static_cast<double>(i + 1);
  }
  dict.emplace_back(OuterKind::sine, Matrix(v1), "sin<v1,x>");
  dict.emplace_back(OuterKind::cosine, Matrix(v2), "cos<v2,x>");
  Matrix both(n, 2);
  both.col(0) = v1;
  both.col(1) = v2;
  dict.emplace_back(OuterKind::gauss, both, "gauss(v1,v2)");
  dict.emplace_back(OuterKind::sine, Matrix(v2), "sin<v2,x>");
  dict.emplace_back(OuterKind::gauss, Matrix(v1), "gauss(v1)");
  return dict;
}

std::vector<CylinderFunction> default_segment_dictionary(Index n, double tau) {
  std::vector<CylinderFunction> dict;
  Vector v1(n), v2(n);
  for (Index i = 0; i < n; ++i) {
    v1(i) = 1.0 / std::sqrt(static_cast<double>(n)) * (i % 2 == 0 ? 1.0 : -0.5);
    v2(i) = 0.5 / static_cast<double>(i + 1);
  }
  using P = std::pair<double, Vector>;
  dict.emplace_back(OuterKind::sine, std::vector<P>{{0.0, v1}}, "sin<v1,xi(0)>");
  dict.emplace_back(OuterKind::cosine, std::vector<P>{{-tau, v2}}, "cos<v2,xi(-tau)>");
  dict.emplace_back(OuterKind::gauss, std::vector<P>{{0.0, v1}, {-0.5 * tau, v2}},
                    "gauss(xi(0),xi(-tau/2))");
  dict.emplace_back(OuterKind::sine, std::vector<P>{{-0.5 * tau, v2}}, "sin<v2,xi(-tau/2)>");
  dict.emplace_back(OuterKind::gauss, std::vector<P>{{-tau, v1}}, "gauss(xi(-tau))");
  return dict;
}

}  // namespace ibplab
