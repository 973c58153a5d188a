#include "contactnet/clustering.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

namespace contactnet {

double pairwise_interface_rmsd(const ClusterInput& a, const ClusterInput& b,
                               double interface_cutoff) {
  const std::vector<Vec3>& rec_a = *a.rec_ca;
  const std::vector<Vec3>& rec_b = *b.rec_ca;

  std::vector<size_t> rec_idx, lig_idx;
  std::vector<uint8_t> lig_hit(a.lig_ca.size(), 0);
  for (size_t i = 0; i < rec_a.size(); ++i) {
    bool hit = false;
    for (size_t j = 0; j < a.lig_ca.size(); ++j)
      if (distance(rec_a[i], a.lig_ca[j]) < interface_cutoff) {
        hit = true;
        lig_hit[j] = 1;
      }
    if (hit) rec_idx.push_back(i);
  }
  for (size_t j = 0; j < a.lig_ca.size(); ++j)
    if (lig_hit[j]) lig_idx.push_back(j);

  if (rec_idx.size() + lig_idx.size() < 3)
    return std::numeric_limits<double>::infinity();

  std::vector<Vec3> pa, pb;
  pa.reserve(rec_idx.size() + lig_idx.size());
  pb.reserve(pa.capacity());
  for (size_t i : rec_idx) { pa.push_back(rec_a[i]); pb.push_back(rec_b[i]); }
  for (size_t j : lig_idx) { pa.push_back(a.lig_ca[j]); pb.push_back(b.lig_ca[j]); }
  return kabsch(pb, pa).rmsd;
}

std::vector<double> condensed_interface_rmsd(const std::vector<ClusterInput>& decoys,
                                             double interface_cutoff) {
  std::vector<double> out;
  out.reserve(decoys.size() * (decoys.size() - 1) / 2);
  for (size_t i = 0; i < decoys.size(); ++i)
    for (size_t j = i + 1; j < decoys.size(); ++j)
      out.push_back(pairwise_interface_rmsd(decoys[i], decoys[j], interface_cutoff));
  return out;
}

std::vector<Cluster> greedy_cluster(const std::vector<ClusterInput>& decoys,
                                    double threshold, double interface_cutoff) {
  std::vector<size_t> order(decoys.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t x, size_t y) {
    if (decoys[x].score != decoys[y].score) return decoys[x].score > decoys[y].score;
    return decoys[x].decoy_id < decoys[y].decoy_id;
  });

  std::vector<uint8_t> assigned(decoys.size(), 0);
  std::vector<Cluster> clusters;
  for (size_t oi = 0; oi < order.size(); ++oi) {
    size_t rep = order[oi];
    if (assigned[rep]) continue;
    assigned[rep] = 1;
    Cluster c;
    c.representative_id = decoys[rep].decoy_id;
    c.representative_score = decoys[rep].score;
    c.member_ids.push_back(decoys[rep].decoy_id);
    for (size_t oj = oi + 1; oj < order.size(); ++oj) {
      size_t cand = order[oj];
      if (assigned[cand]) continue;
      if (pairwise_interface_rmsd(decoys[rep], decoys[cand], interface_cutoff) < threshold) {
        assigned[cand] = 1;
        c.member_ids.push_back(decoys[cand].decoy_id);
      }
    }
    clusters.push_back(std::move(c));
  }
  return clusters;
}

void write_cluster_report(const std::vector<Cluster>& clusters, std::ostream& out) {
  out << "cluster_rank\trepresentative_id\trepresentative_score\tmember_count\tmember_ids\n";
  for (size_t i = 0; i < clusters.size(); ++i) {
    const Cluster& c = clusters[i];
    out << (i + 1) << '\t' << c.representative_id << '\t';
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", c.representative_score);
    out << buf << '\t' << c.member_ids.size() << '\t';
    for (size_t m = 0; m < c.member_ids.size(); ++m)
      out << (m ? "," : "") << c.member_ids[m];
    out << '\n';
  }
}

}  // namespace contactnet
