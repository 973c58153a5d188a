#pragma once

#include <utility>
#include <vector>

#include "contactnet/linalg.hpp"
#include "contactnet/pdb.hpp"

namespace contactnet {

// Dense pairwise CA-CA distance matrix. Square when both chains are the
// same, rectangular for inter-protein.
struct Distogram {
  size_t rows = 0, cols = 0;
  std::vector<double> values;  // row-major
  char row_chain = ' ', col_chain = ' ';

  double at(size_t i, size_t j) const { return values[i * cols + j]; }
  double& at(size_t i, size_t j) { return values[i * cols + j]; }
};

Distogram distance_matrix(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

// Boolean adjacency over one chain; edge iff d < cutoff (strict), self-loops
// always present.
struct NeighborGraph {
  size_t n = 0;
  double cutoff = 16.0;
  std::vector<uint8_t> adjacency;  // row-major n x n

  bool connected(size_t i, size_t j) const { return adjacency[i * n + j] != 0; }
};

NeighborGraph neighbor_graph(const Distogram& d, double cutoff = 16.0);

struct KabschResult {
  RigidTransform transform;  // maps P onto Q
  double rmsd = 0.0;
  bool degenerate = false;   // rank-deficient covariance (e.g. collinear)
};

// Proper rotation + translation minimizing sum ||R*p + t - q||^2 over
// positional correspondences. Requires k >= 3.
KabschResult kabsch(const std::vector<Vec3>& p, const std::vector<Vec3>& q);

// No superposition; lengths must match, k >= 1.
double rmsd(const std::vector<Vec3>& p, const std::vector<Vec3>& q);

// Residue i of rec is interface iff min_j d(CA_i, CA_j) < cutoff; symmetric
// for lig. Returns (rec indices, lig indices).
std::pair<std::vector<size_t>, std::vector<size_t>> interface_residues_by_distance(
    const ResidueChain& rec, const ResidueChain& lig, double cutoff = 10.0);

}  // namespace contactnet
