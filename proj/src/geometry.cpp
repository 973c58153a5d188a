#include "contactnet/geometry.hpp"

#include <Eigen/Dense>
#include <stdexcept>

namespace contactnet {

Distogram distance_matrix(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("distance_matrix: empty coordinate set");
  Distogram d;
  d.rows = a.size();
  d.cols = b.size();
  d.values.resize(d.rows * d.cols);
  for (size_t i = 0; i < d.rows; ++i)
    for (size_t j = 0; j < d.cols; ++j) d.values[i * d.cols + j] = distance(a[i], b[j]);
  return d;
}

NeighborGraph neighbor_graph(const Distogram& d, double cutoff) {
  if (d.rows != d.cols)
    throw std::invalid_argument("neighbor_graph: distogram must be square");
  NeighborGraph g;
  g.n = d.rows;
  g.cutoff = cutoff;
  g.adjacency.assign(g.n * g.n, 0);
  for (size_t i = 0; i < g.n; ++i) {
    for (size_t j = 0; j < g.n; ++j)
      g.adjacency[i * g.n + j] = (i == j || d.at(i, j) < cutoff) ? 1 : 0;
  }
  return g;
}

KabschResult kabsch(const std::vector<Vec3>& p, const std::vector<Vec3>& q) {
  if (p.size() != q.size())
    throw std::invalid_argument("kabsch: size mismatch");
  if (p.size() < 3)
    throw std::invalid_argument("kabsch: need at least 3 points");

  const size_t k = p.size();
  Vec3 pc{}, qc{};
  for (size_t i = 0; i < k; ++i) { pc += p[i]; qc += q[i]; }
  pc = pc * (1.0 / k);
  qc = qc * (1.0 / k);

  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (size_t i = 0; i < k; ++i) {
    Eigen::Vector3d dp(p[i].x - pc.x, p[i].y - pc.y, p[i].z - pc.z);
    Eigen::Vector3d dq(q[i].x - qc.x, q[i].y - qc.y, q[i].z - qc.z);
    h += dp * dq.transpose();
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU(), v = svd.matrixV();
  double sign = (v * u.transpose()).determinant() >= 0 ? 1.0 : -1.0;
  Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
  s(2, 2) = sign;
  Eigen::Matrix3d rot = v * s * u.transpose();

  KabschResult res;
  const auto& sv = svd.singularValues();
  res.degenerate = sv(1) < 1e-9 * std::max(sv(0), 1e-300);

  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) res.transform.rotation(i, j) = rot(i, j);
  Vec3 rpc = res.transform.rotation * pc;
  res.transform.translation = qc - rpc;

  double ss = 0;
  for (size_t i = 0; i < k; ++i) {
    Vec3 moved = res.transform.apply(p[i]);
    Vec3 diff = moved - q[i];
    ss += diff.dot(diff);
  }
  res.rmsd = std::sqrt(ss / k);
  return res;
}

double rmsd(const std::vector<Vec3>& p, const std::vector<Vec3>& q) {
  if (p.size() != q.size())
    throw std::invalid_argument("rmsd: size mismatch");
  if (p.empty())
    throw std::invalid_argument("rmsd: empty input");
  double ss = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    Vec3 diff = p[i] - q[i];
    ss += diff.dot(diff);
  }
  return std::sqrt(ss / p.size());
}

std::pair<std::vector<size_t>, std::vector<size_t>> interface_residues_by_distance(
    const ResidueChain& rec, const ResidueChain& lig, double cutoff) {
  std::vector<size_t> ri, li;
  std::vector<uint8_t> lig_hit(lig.residues.size(), 0);
  for (size_t i = 0; i < rec.residues.size(); ++i) {
    bool hit = false;
    for (size_t j = 0; j < lig.residues.size(); ++j) {
      if (distance(rec.residues[i].ca, lig.residues[j].ca) < cutoff) {
        hit = true;
        lig_hit[j] = 1;
      }
    }
    if (hit) ri.push_back(i);
  }
  for (size_t j = 0; j < lig.residues.size(); ++j)
    if (lig_hit[j]) li.push_back(j);
  return {std::move(ri), std::move(li)};
}

}  // namespace contactnet
