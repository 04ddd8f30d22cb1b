#include "ibplab/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace ibplab {

namespace {

Vector vector_from_json(const Json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + ": expected a non-empty array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(std::string(what) + ": expected numbers");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

Matrix matrix_from_json(const Json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + ": expected rows");
  const Index rows = static_cast<Index>(j.size());
  Index cols = -1;
  Matrix m;
  for (Index r = 0; r < rows; ++r) {
    Vector row = vector_from_json(j[r], what);
    if (cols < 0) {
      cols = row.size();
      m.resize(rows, cols);
    } else if (row.size() != cols) {
      throw ConfigError(std::string(what) + ": ragged rows");
    }
    m.row(r) = row.transpose();
  }
  return m;
}

double number_or(const Json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(std::string(key) + ": expected a number");
  return j[key].get<double>();
}

std::uint64_t uint_or(const Json& j, const char* key, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_unsigned() && !j[key].is_number_integer()) {
    throw ConfigError(std::string(key) + ": expected an integer");
  }
  return j[key].get<std::uint64_t>();
}

std::string string_or(const Json& j, const char* key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) throw ConfigError(std::string(key) + ": expected a string");
  return j[key].get<std::string>();
}

}  // namespace

ExperimentConfig parse_config(const Json& j) {
  ExperimentConfig c;
  c.raw = j;
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  c.model = string_or(j, "model", "");
  static const char* kModels[] = {"semilinear", "hamiltonian", "delay",
                                  "invariance", "fomin", "contraction"};
  bool known = false;
  for (const char* m : kModels) known = known || c.model == m;
  if (!known) throw ConfigError("config: unknown model '" + c.model + "'");

  if (j.contains("operator")) {
    const Json& op = j["operator"];
    c.n = static_cast<Index>(uint_or(op, "n", 1));
    if (c.n <= 0) throw ConfigError("operator.n must be positive");
    if (op.contains("eigenvalues")) {
      const Json& ev = op["eigenvalues"];
      c.eigen_rule = string_or(ev, "rule", "pow");
      if (c.eigen_rule == "pow") {
        c.eigen_p = number_or(ev, "p", 2.0);
        c.eigen_scale = number_or(ev, "scale", 1.0);
      } else if (c.eigen_rule == "list") {
        if (!ev.contains("values")) throw ConfigError("operator.eigenvalues.values missing");
        c.eigen_values = vector_from_json(ev["values"], "operator.eigenvalues.values");
        if (c.eigen_values.size() != c.n) throw ConfigError("operator.eigenvalues: wrong length");
      } else {
        throw ConfigError("operator.eigenvalues.rule must be 'pow' or 'list'");
      }
    }
  }

  if (j.contains("sigma")) {
    const Json& s = j["sigma"];
    c.sigma_kind = string_or(s, "kind", "identity");
    if (c.sigma_kind == "identity") {
    } else if (c.sigma_kind == "diag_pow") {
      c.sigma_p = number_or(s, "p", 0.0);
      c.sigma_scale = number_or(s, "scale", 1.0);
    } else if (c.sigma_kind == "diag") {
      if (!s.contains("values")) throw ConfigError("sigma.values missing");
      c.sigma_values = vector_from_json(s["values"], "sigma.values");
      if (c.sigma_values.size() != c.n) throw ConfigError("sigma.values: wrong length");
    } else if (c.sigma_kind == "dense") {
      if (!s.contains("values")) throw ConfigError("sigma.values missing");
      c.sigma_dense = matrix_from_json(s["values"], "sigma.values");
      if (c.sigma_dense.rows() != c.n) throw ConfigError("sigma matrix: wrong size");
    } else {
      throw ConfigError("sigma.kind must be identity|diag_pow|diag|dense");
    }
  }

  if (j.contains("drift")) {
    const Json& d = j["drift"];
    c.drift_name = string_or(d, "name", "zero");
    for (auto it = d.begin(); it != d.end(); ++it) {
      if (it.key() == "name") continue;
      if (it.key() == "matrix") {
        c.drift_params.matrix = matrix_from_json(it.value(), "drift.matrix");
      } else if (it.key() == "a") {
        c.drift_params.vector = vector_from_json(it.value(), "drift.a");
      } else if (it.value().is_number()) {
        c.drift_params.scalars[it.key()] = it.value().get<double>();
      } else {
        throw ConfigError("drift." + it.key() + ": expected a number");
      }
    }
  }

  if (j.contains("time")) {
    const Json& t = j["time"];
    c.T = number_or(t, "T", 1.0);
    c.steps = static_cast<Index>(uint_or(t, "steps", 1024));
    if (!(c.T > 0.0) || c.steps <= 0) throw ConfigError("time: T and steps must be positive");
  }
  c.tau = number_or(j, "tau", 0.0);
  if (c.model == "delay") {
    if (!(c.tau > 0.0)) throw ConfigError("delay model requires tau > 0");
    if (!(c.T > c.tau)) throw ConfigError("delay model requires T > tau");
    c.drift_params.scalars.emplace("tau", c.tau);
  }

  if (j.contains("mc")) {
    const Json& m = j["mc"];
    c.paths = uint_or(m, "paths", c.paths);
    c.seed = uint_or(m, "seed", c.seed);
    c.z_max = number_or(m, "z_max", c.z_max);
    c.kappa_min = number_or(m, "kappa_min", c.kappa_min);
    c.workers = static_cast<int>(uint_or(m, "workers", 0));
    c.chunk = uint_or(m, "chunk", c.chunk);
    if (c.paths == 0 || c.chunk == 0) throw ConfigError("mc: paths and chunk must be positive");
  }

  if (j.contains("direction")) {
    const Json& d = j["direction"];
    if (d.contains("k")) c.dir_k = vector_from_json(d["k"], "direction.k");
    if (d.contains("k1")) c.dir_k1 = vector_from_json(d["k1"], "direction.k1");
    if (d.contains("k2")) c.dir_k2 = vector_from_json(d["k2"], "direction.k2");
    if (d.contains("eta")) {
      const Json& e = d["eta"];
      c.eta_kind = string_or(e, "kind", "const");
      if (e.contains("v")) c.eta_v0 = vector_from_json(e["v"], "direction.eta.v");
      if (e.contains("v0")) c.eta_v0 = vector_from_json(e["v0"], "direction.eta.v0");
      if (e.contains("v1")) c.eta_v1 = vector_from_json(e["v1"], "direction.eta.v1");
      if (c.eta_kind != "const" && c.eta_kind != "ramp") {
        throw ConfigError("direction.eta.kind must be const|ramp");
      }
      if (c.eta_v0.size() == 0) throw ConfigError("direction.eta needs v (or v0)");
      if (c.eta_kind == "ramp" && c.eta_v1.size() == 0) {
        throw ConfigError("direction.eta ramp needs v1");
      }
    }
  }

  if (j.contains("initial")) {
    const Json& ic = j["initial"];
    if (ic.contains("x0")) c.x0 = vector_from_json(ic["x0"], "initial.x0");
    if (ic.contains("y0")) c.y0 = vector_from_json(ic["y0"], "initial.y0");
    if (ic.contains("segment")) {
      const Json& s = ic["segment"];
      c.segment_kind = string_or(s, "kind", "const");
      if (s.contains("v")) c.segment_v0 = vector_from_json(s["v"], "initial.segment.v");
      if (s.contains("v0")) c.segment_v0 = vector_from_json(s["v0"], "initial.segment.v0");
      if (s.contains("v1")) c.segment_v1 = vector_from_json(s["v1"], "initial.segment.v1");
      if (c.segment_kind != "const" && c.segment_kind != "ramp") {
        throw ConfigError("initial.segment.kind must be const|ramp");
      }
    }
  }

  if (j.contains("hamiltonian")) {
    const Json& h = j["hamiltonian"];
    c.b_kind = string_or(h, "B", "identity");
    if (h.contains("B_matrix")) {
      c.b_kind = "dense";
      c.b_dense = matrix_from_json(h["B_matrix"], "hamiltonian.B_matrix");
    }
    c.x_dim = static_cast<Index>(uint_or(h, "x_dim", 0));
  }
  if (c.x_dim == 0) c.x_dim = c.n;

  if (j.contains("girsanov")) {
    const Json& g = j["girsanov"];
    if (g.contains("epsilons")) {
      for (const auto& e : g["epsilons"]) c.girsanov_epsilons.push_back(e.get<double>());
    }
    c.shift_check_c = number_or(g, "shift_check_c", c.shift_check_c);
  }

  if (j.contains("test_functions")) c.test_functions = j["test_functions"];

  if (j.contains("invariance")) {
    const Json& inv = j["invariance"];
    if (inv.contains("Q")) c.inv_q_diag = vector_from_json(inv["Q"], "invariance.Q");
    c.chain_steps = uint_or(inv, "chain_steps", c.chain_steps);
    c.chain_dt = number_or(inv, "chain_dt", c.chain_dt);
    c.inv_samples = static_cast<Index>(uint_or(inv, "samples", c.inv_samples));
    c.stationarity_T = number_or(inv, "stationarity_T", c.stationarity_T);
  }

  if (j.contains("fomin")) {
    const Json& f = j["fomin"];
    if (f.contains("directions")) {
      for (const auto& d : f["directions"]) {
        c.fomin_directions.push_back(vector_from_json(d, "fomin.directions"));
      }
    }
    c.fomin_samples = static_cast<Index>(uint_or(f, "samples", c.fomin_samples));
    c.sampler_dt = number_or(f, "sampler_dt", c.sampler_dt);
  }

  if (j.contains("contraction")) {
    const Json& k = j["contraction"];
    if (k.contains("x0")) c.contraction_x0 = vector_from_json(k["x0"], "contraction.x0");
    if (k.contains("y0")) c.contraction_y0 = vector_from_json(k["y0"], "contraction.y0");
    c.contraction_kappa = number_or(k, "kappa", c.contraction_kappa);
  }

  if (j.contains("output")) {
    c.dump_paths = static_cast<int>(uint_or(j["output"], "dump_paths", 0));
  }

  // model-specific defaults
  if (c.model == "semilinear" && c.dir_k.size() == 0) {
    c.dir_k = Vector::Unit(c.n, 0);
  }
  if (c.model == "hamiltonian") {
    if (c.dir_k1.size() == 0) c.dir_k1 = Vector::Unit(c.x_dim, 0);
    if (c.dir_k2.size() == 0) c.dir_k2 = Vector::Unit(c.n, std::min<Index>(1, c.n - 1));
  }
  if (c.model == "delay" && c.eta_v0.size() == 0) {
    c.eta_kind = "const";
    c.eta_v0 = Vector::Ones(c.n);
  }
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }
  return parse_config(j);
}

std::string config_hash(const Json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

SpectralOperator ExperimentConfig::make_operator() const {
  if (eigen_rule == "list") return SpectralOperator(eigen_values);
  return SpectralOperator::power_law(n, eigen_p, eigen_scale);
}

SigmaOperator ExperimentConfig::make_sigma() const {
  if (sigma_kind == "identity") return SigmaOperator::identity(n);
  if (sigma_kind == "diag_pow") {
    Vector d(n);
    for (Index i = 0; i < n; ++i) d(i) = sigma_scale * std::pow(double(i + 1), sigma_p);
    return SigmaOperator::diagonal(std::move(d));
  }
  if (sigma_kind == "diag") return SigmaOperator::diagonal(sigma_values);
  return SigmaOperator::dense(sigma_dense);
}

DriftModel ExperimentConfig::make_state_drift(const SpectralOperator& A) const {
  return registry_get_state(drift_name, drift_params, A.dim(), &A);
}

SegmentDriftModel ExperimentConfig::make_segment_drift() const {
  return registry_get_segment(drift_name, drift_params, n);
}

SimGrid ExperimentConfig::make_grid() const { return SimGrid(T, steps); }

Matrix ExperimentConfig::make_b_matrix() const {
  if (b_kind == "identity") {
    if (x_dim != n) throw ConfigError("identity B requires x_dim == n");
    return Matrix::Identity(n, n);
  }
  if (b_dense.rows() != x_dim || b_dense.cols() != n) {
    throw ConfigError("hamiltonian.B_matrix: wrong size");
  }
  return b_dense;
}

Vector ExperimentConfig::eta_at(double theta) const {
  if (eta_kind == "const") return eta_v0;
  const double s = (theta + tau) / tau;  // 0 at -tau, 1 at 0
  return (1.0 - s) * eta_v0 + s * eta_v1;
}

Vector ExperimentConfig::eta_prime_at(double /*theta*/) const {
  if (eta_kind == "const") return Vector::Zero(eta_v0.size());
  return (eta_v1 - eta_v0) / tau;
}

Matrix ExperimentConfig::initial_segment(const SimGrid& grid) const {
  const double dt = grid.dt();
  const double ratio = tau / dt;
  const Index m = static_cast<Index>(std::llround(ratio));
  Vector v0 = segment_v0.size() ? segment_v0 : Vector::Zero(n);
  Matrix seg(n, m + 1);
  for (Index l = 0; l <= m; ++l) {
    if (segment_kind == "ramp" && segment_v1.size()) {
      const double s = static_cast<double>(l) / static_cast<double>(m);
      seg.col(l) = (1.0 - s) * v0 + s * segment_v1;
    } else {
      seg.col(l) = v0;
    }
  }
  return seg;
}

std::vector<CylinderFunction> ExperimentConfig::make_dictionary(Index state_dim) const {
  if (test_functions.is_null() || test_functions.empty()) return default_dictionary(state_dim);
  std::vector<CylinderFunction> dict;
  for (const auto& tf : test_functions) {
    const OuterKind kind = outer_kind_from_string(string_or(tf, "outer", "sin"));
    if (!tf.contains("vectors")) throw ConfigError("test_functions: state entries need 'vectors'");
    Matrix v = matrix_from_json(tf["vectors"], "test_functions.vectors").transpose();
    if (v.rows() != state_dim) throw ConfigError("test_functions: vector dim mismatch");
    dict.emplace_back(kind, std::move(v), string_or(tf, "name", ""));
  }
  return dict;
}

std::vector<CylinderFunction> ExperimentConfig::make_segment_dictionary() const {
  if (test_functions.is_null() || test_functions.empty()) {
    return default_segment_dictionary(n, tau);
  }
  std::vector<CylinderFunction> dict;
  for (const auto& tf : test_functions) {
    const OuterKind kind = outer_kind_from_string(string_or(tf, "outer", "sin"));
    if (!tf.contains("points")) throw ConfigError("test_functions: segment entries need 'points'");
    std::vector<std::pair<double, Vector>> pts;
    for (const auto& p : tf["points"]) {
      if (!p.contains("v")) throw ConfigError("test_functions: segment points need 'v'");
      pts.emplace_back(number_or(p, "theta", 0.0), vector_from_json(p["v"], "test_functions.v"));
    }
    dict.emplace_back(kind, std::move(pts), string_or(tf, "name", ""));
  }
  return dict;
}

}  // namespace ibplab
