#include "sqdlab/ucj.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sqdlab::ucj {

using nlohmann::json;

bool Topology::has_same(int p, int q) const {
  return same_spin_edges.count({std::min(p, q), std::max(p, q)}) > 0;
}

bool Topology::has_opp(int p, int q) const {
  return opp_spin_edges.count({std::min(p, q), std::max(p, q)}) > 0;
}

Topology Topology::complete(int n_orb) {
  Topology t;
  t.name = "complete";
  for (int p = 0; p < n_orb; ++p)
    for (int q = p; q < n_orb; ++q) {
      t.same_spin_edges.insert({p, q});
      t.opp_spin_edges.insert({p, q});
    }
  return t;
}

Topology Topology::line(int n_orb) {
  Topology t;
  t.name = "line";
  for (int p = 0; p + 1 < n_orb; ++p) t.same_spin_edges.insert({p, p + 1});
  for (int p = 0; p < n_orb; p += 4) t.opp_spin_edges.insert({p, p});
  return t;
}

UcjParams from_t_amplitudes(const T2Amplitudes& t2, int r, int n_orb,
                            const MatrixXd& final_rotation) {
  if (r < 1) throw std::invalid_argument("from_t_amplitudes: r must be >= 1");
  for (double v : t2.data())
    if (!std::isfinite(v))
      throw std::invalid_argument("from_t_amplitudes: non-finite t2 entry");
  const int no = t2.n_occ();
  const int nv = t2.n_virt();
  if (no + nv != n_orb)
    throw std::invalid_argument("from_t_amplitudes: t2 shape inconsistent with n_orb");

  // T over composite (occ, virt) pairs; symmetric since t2[i,j,a,b] = t2[j,i,b,a].
  const int dim = no * nv;
  MatrixXd T(dim, dim);
  for (int i = 0; i < no; ++i)
    for (int a = 0; a < nv; ++a)
      for (int j = 0; j < no; ++j)
        for (int b = 0; b < nv; ++b)
          T(i * nv + a, j * nv + b) = t2(i, j, a, b);

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(T);
  std::vector<int> order(dim);
  for (int k = 0; k < dim; ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(es.eigenvalues()[a]) > std::abs(es.eigenvalues()[b]);
  });

  UcjParams params;
  params.final_rotation = final_rotation;
  for (int k = 0; k < r; ++k) {
    UcjLayer layer;
    if (k >= dim || std::abs(es.eigenvalues()[order[k]]) < 1e-14) {
      layer.U = MatrixXd::Identity(n_orb, n_orb);
      layer.J_same = MatrixXd::Zero(n_orb, n_orb);
      layer.J_opp = MatrixXd::Zero(n_orb, n_orb);
      params.layers.push_back(std::move(layer));
      continue;
    }
    const double lambda = es.eigenvalues()[order[k]];
    const Eigen::VectorXd v = es.eigenvectors().col(order[k]);
    MatrixXd X = MatrixXd::Zero(n_orb, n_orb);
    for (int i = 0; i < no; ++i)
      for (int a = 0; a < nv; ++a)
        X(i, no + a) = X(no + a, i) = v[i * nv + a];
    Eigen::SelfAdjointEigenSolver<MatrixXd> xs(X);
    layer.U = xs.eigenvectors();
    const Eigen::VectorXd x = xs.eigenvalues();
    layer.J_same = lambda * (x * x.transpose());
    layer.J_opp = layer.J_same;
    params.layers.push_back(std::move(layer));
  }
  return params;
}

double reconstruction_residual(const T2Amplitudes& t2, const UcjParams& params) {
  const int no = t2.n_occ();
  const int nv = t2.n_virt();
  const int n = no + nv;
  double ss = 0.0;
  for (int i = 0; i < no; ++i)
    for (int j = 0; j < no; ++j)
      for (int a = 0; a < nv; ++a)
        for (int b = 0; b < nv; ++b) {
          double rec = 0.0;
          for (const auto& layer : params.layers) {
            // lambda * X[i, no+a] * X[j, no+b] with X = U diag(x) U^T and
            // J = lambda x x^T.
            double acc = 0.0;
            for (int u = 0; u < n; ++u)
              for (int w = 0; w < n; ++w)
                acc += layer.U(i, u) * layer.U(no + a, u) * layer.J_same(u, w) *
                       layer.U(j, w) * layer.U(no + b, w);
            rec += acc;
          }
          const double d = t2(i, j, a, b) - rec;
          ss += d * d;
        }
  return std::sqrt(ss);
}

UcjParams prune_to_topology(const UcjParams& params, const Topology& topo) {
  const int n = params.n_orb();
  for (const auto& e : topo.same_spin_edges)
    if (e.first < 0 || e.second >= n)
      throw std::invalid_argument("prune_to_topology: edge index out of range");
  for (const auto& e : topo.opp_spin_edges)
    if (e.first < 0 || e.second >= n)
      throw std::invalid_argument("prune_to_topology: edge index out of range");

  UcjParams out = params;
  for (auto& layer : out.layers) {
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) {
        if (!topo.has_same(p, q)) layer.J_same(p, q) = 0.0;
        if (!topo.has_opp(p, q)) layer.J_opp(p, q) = 0.0;
      }
  }
  return out;
}

namespace {

struct PlaneRotation {
  int row;      // acts on rows (row, row+1)
  double theta; // cos/sin angle
};

// Q = G_1^T ... G_T^T D with adjacent-pair rotations and D = diag(+-1).
void givens_decompose(const MatrixXd& Q, std::vector<PlaneRotation>& rots,
                      Eigen::VectorXd& signs) {
  const int n = int(Q.rows());
  MatrixXd A = Q;
  rots.clear();
  for (int c = 0; c < n - 1; ++c)
    for (int r = n - 1; r > c; --r) {
      const double a = A(r - 1, c);
      const double b = A(r, c);
      if (std::abs(b) < 1e-15) continue;
      const double h = std::hypot(a, b);
      const double ct = a / h, st = -b / h;
      for (int k = 0; k < n; ++k) {
        const double x = A(r - 1, k), y = A(r, k);
        A(r - 1, k) = ct * x - st * y;
        A(r, k) = st * x + ct * y;
      }
      rots.push_back({r - 1, std::atan2(st, ct)});
    }
  signs = A.diagonal();
}

} // namespace

void append_orbital_rotation(Circuit& c, const MatrixXd& Q, int offset) {
  const int n = int(Q.rows());
  if ((Q.transpose() * Q - MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("append_orbital_rotation: Q is not orthogonal");
  std::vector<PlaneRotation> rots;
  Eigen::VectorXd signs;
  givens_decompose(Q, rots, signs);
  // Sign flips first, then rotations in reverse elimination order; the
  // composed single-particle transfer matrix equals Q.
  for (int i = 0; i < n; ++i)
    if (signs[i] < 0)
      c.gates.push_back({GateKind::Phase, offset + i, -1, std::numbers::pi, 0.0});
  for (auto it = rots.rbegin(); it != rots.rend(); ++it) {
    if (it->theta == 0.0) continue;
    c.gates.push_back(
        {GateKind::XXPlusYY, offset + it->row, offset + it->row + 1,
         -2.0 * it->theta, 0.0});
  }
}

Circuit synthesize_circuit(const UcjParams& params, const Determinant& reference,
                           double angle_epsilon) {
  const int n = params.n_orb();
  if (n == 0) throw std::invalid_argument("synthesize_circuit: empty params");
  if ((reference.alpha >> n) != 0 || (reference.beta >> n) != 0)
    throw std::invalid_argument(
        "synthesize_circuit: reference occupies orbitals beyond n_orb");

  Circuit c;
  c.n_orb = n;
  for (int i = 0; i < n; ++i) {
    if (reference.alpha >> i & 1) c.gates.push_back({GateKind::X, i});
    if (reference.beta >> i & 1) c.gates.push_back({GateKind::X, n + i});
  }

  auto keep = [angle_epsilon](double angle) {
    return angle != 0.0 && std::abs(angle) > angle_epsilon;
  };

  for (const auto& layer : params.layers) {
    append_orbital_rotation(c, layer.U.transpose(), 0);
    append_orbital_rotation(c, layer.U.transpose(), n);
    for (int off : {0, n}) {
      for (int p = 0; p < n; ++p) {
        if (keep(layer.J_same(p, p) / 2.0))
          c.gates.push_back(
              {GateKind::Phase, off + p, -1, layer.J_same(p, p) / 2.0, 0.0});
        for (int q = p + 1; q < n; ++q)
          if (keep(layer.J_same(p, q)))
            c.gates.push_back(
                {GateKind::CPhase, off + p, off + q, layer.J_same(p, q), 0.0});
      }
    }
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q)
        if (keep(layer.J_opp(p, q)))
          c.gates.push_back({GateKind::CPhase, p, n + q, layer.J_opp(p, q), 0.0});
    append_orbital_rotation(c, layer.U, 0);
    append_orbital_rotation(c, layer.U, n);
  }
  append_orbital_rotation(c, params.final_rotation, 0);
  append_orbital_rotation(c, params.final_rotation, n);
  return c;
}

GateCensus gate_census(const Circuit& c) {
  GateCensus g;
  for (const auto& gate : c.gates) {
    if (gate.kind == GateKind::XXPlusYY) {
      ++g.n_xxpyy;
    } else if (gate.kind == GateKind::CPhase) {
      ++g.n_cp;
      const bool r1 = gate.q1 >= c.n_orb;
      const bool r2 = gate.q2 >= c.n_orb;
      if (r1 == r2)
        ++g.n_cp_same;
      else
        ++g.n_cp_opp;
    }
  }
  g.n_two_qubit = g.n_xxpyy + g.n_cp;
  return g;
}

CpHistogram cp_histogram(const UcjParams& params, int bins) {
  if (bins < 2) throw std::invalid_argument("cp_histogram: bins must be >= 2");
  std::vector<double> values;
  const int n = params.n_orb();
  for (const auto& layer : params.layers) {
    for (int spin = 0; spin < 2; ++spin)
      for (int p = 0; p < n; ++p)
        for (int q = p + 1; q < n; ++q) values.push_back(layer.J_same(p, q));
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) values.push_back(layer.J_opp(p, q));
  }
  CpHistogram h;
  h.total = std::int64_t(values.size());
  if (values.empty()) return h;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  double lo = *mn, hi = *mx;
  const double range = hi - lo;
  if (range == 0.0) {
    lo -= 0.5;
    hi += 0.5;
  }
  h.edges.resize(bins + 1);
  for (int i = 0; i <= bins; ++i)
    h.edges[i] = lo + (hi - lo) * double(i) / bins;
  h.counts.assign(bins, 0);
  std::int64_t low_amp = 0;
  for (double v : values) {
    int b = int((v - lo) / (hi - lo) * bins);
    b = std::clamp(b, 0, bins - 1);
    ++h.counts[b];
    if (std::abs(v) < 0.01 * range || range == 0.0) ++low_amp;
  }
  h.low_amplitude_fraction = double(low_amp) / double(h.total);
  return h;
}

std::string to_text(const Circuit& c) {
  std::ostringstream os;
  os.precision(17);
  os << "# n_orb " << c.n_orb << "\n";
  for (const auto& g : c.gates) {
    switch (g.kind) {
      case GateKind::X: os << "X " << g.q1 << "\n"; break;
      case GateKind::XXPlusYY:
        os << "XXPLUSYY " << g.q1 << " " << g.q2 << " " << g.theta << " "
           << g.beta << "\n";
        break;
      case GateKind::Phase:
        os << "PHASE " << g.q1 << " " << g.theta << "\n";
        break;
      case GateKind::CPhase:
        os << "CPHASE " << g.q1 << " " << g.q2 << " " << g.theta << "\n";
        break;
    }
  }
  return os.str();
}

Circuit circuit_from_text(const std::string& text) {
  Circuit c;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "#") {
      std::string key;
      ls >> key;
      if (key == "n_orb") ls >> c.n_orb;
      continue;
    }
    Gate g;
    if (tok == "X") {
      g.kind = GateKind::X;
      ls >> g.q1;
    } else if (tok == "XXPLUSYY") {
      g.kind = GateKind::XXPlusYY;
      ls >> g.q1 >> g.q2 >> g.theta >> g.beta;
    } else if (tok == "PHASE") {
      g.kind = GateKind::Phase;
      ls >> g.q1 >> g.theta;
    } else if (tok == "CPHASE") {
      g.kind = GateKind::CPhase;
      ls >> g.q1 >> g.q2 >> g.theta;
    } else {
      throw std::invalid_argument("circuit_from_text: unknown gate '" + tok + "'");
    }
    if (ls.fail())
      throw std::invalid_argument("circuit_from_text: malformed line '" + line + "'");
    c.gates.push_back(g);
  }
  return c;
}

namespace {

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j) {
  const int rows = int(j.size());
  const int cols = rows > 0 ? int(j[0].size()) : 0;
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  return m;
}

} // namespace

std::string to_json(const UcjParams& params) {
  json j;
  j["n_orb"] = params.n_orb();
  j["r"] = params.r();
  j["final_rotation"] = matrix_to_json(params.final_rotation);
  json layers = json::array();
  for (const auto& layer : params.layers) {
    layers.push_back({{"U", matrix_to_json(layer.U)},
                      {"J_same", matrix_to_json(layer.J_same)},
                      {"J_opp", matrix_to_json(layer.J_opp)}});
  }
  j["layers"] = layers;
  return j.dump(2);
}

UcjParams ucj_params_from_json(const std::string& text) {
  const json j = json::parse(text);
  UcjParams params;
  params.final_rotation = matrix_from_json(j.at("final_rotation"));
  for (const auto& lj : j.at("layers")) {
    UcjLayer layer;
    layer.U = matrix_from_json(lj.at("U"));
    layer.J_same = matrix_from_json(lj.at("J_same"));
    layer.J_opp = matrix_from_json(lj.at("J_opp"));
    params.layers.push_back(std::move(layer));
  }
  return params;
}

} // namespace sqdlab::ucj
