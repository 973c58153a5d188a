#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "contactnet/geometry.hpp"

namespace contactnet {

// One pose in the clustering pool. Receptor coordinates may be shared;
// ligand coordinates are pose-specific.
struct ClusterInput {
  std::string decoy_id;
  double score = 0.0;
  const std::vector<Vec3>* rec_ca = nullptr;
  std::vector<Vec3> lig_ca;
};

struct Cluster {
  std::string representative_id;
  double representative_score = 0.0;
  std::vector<std::string> member_ids;  // includes the representative
};

// Interface RMSD between two decoys with the interface residues taken from
// the FIRST decoy (CA-CA < 10 A across chains in that decoy), superposed
// over that interface. +inf when the first decoy has no interface.
double pairwise_interface_rmsd(const ClusterInput& a, const ClusterInput& b,
                               double interface_cutoff = 10.0);

// Condensed upper-triangle matrix: entry for (i,j), i<j, in row-major order.
std::vector<double> condensed_interface_rmsd(const std::vector<ClusterInput>& decoys,
                                             double interface_cutoff = 10.0);

// Greedy score-seeded clustering: best-scored unassigned decoy seeds a
// cluster and absorbs every unassigned decoy within `threshold`.
std::vector<Cluster> greedy_cluster(const std::vector<ClusterInput>& decoys,
                                    double threshold = 5.0,
                                    double interface_cutoff = 10.0);

// TSV: cluster_rank, representative_id, representative_score, member_count,
// member_ids (comma separated).
void write_cluster_report(const std::vector<Cluster>& clusters, std::ostream& out);

}  // namespace contactnet
