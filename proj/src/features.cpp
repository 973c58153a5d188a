#include "contactnet/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace contactnet {

namespace {

constexpr double kPi = std::numbers::pi;

// Dihedral over four points, degrees in (-180, 180].
double pseudo_dihedral(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3) {
  Vec3 b1 = p1 - p0, b2 = p2 - p1, b3 = p3 - p2;
  Vec3 n1 = b1.cross(b2), n2 = b2.cross(b3);
  Vec3 m = n1.cross(n2);
  double x = n1.dot(n2);
  double y = m.dot(b2) / std::max(b2.norm(), 1e-12);
  return std::atan2(y, x) * 180.0 / kPi;
}

// Tien et al. theoretical max SASA (A^2), indexed by AminoAcid order.
constexpr std::array<double, 20> kMaxSasa = {
    129.0, 274.0, 195.0, 193.0, 167.0, 225.0, 223.0, 104.0, 224.0, 197.0,
    201.0, 236.0, 224.0, 240.0, 159.0, 155.0, 172.0, 285.0, 263.0, 174.0};

double max_sasa_mean() {
  double s = 0;
  for (double v : kMaxSasa) s += v;
  return s / kMaxSasa.size();
}

}  // namespace

char ss_to_char(SecondaryStructure ss) {
  switch (ss) {
    case SecondaryStructure::Helix: return 'H';
    case SecondaryStructure::Strand: return 'E';
    default: return 'C';
  }
}

SecondaryStructure ss_from_char(char c) {
  if (c == 'H') return SecondaryStructure::Helix;
  if (c == 'E') return SecondaryStructure::Strand;
  return SecondaryStructure::Coil;
}

std::vector<SecondaryStructure> assign_secondary_structure(const ResidueChain& chain) {
  const size_t n = chain.residues.size();
  std::vector<SecondaryStructure> ss(n, SecondaryStructure::Coil);
  if (n < 5) return ss;

  std::vector<Vec3> ca = ca_coords(chain);
  auto d = [&](size_t i, size_t j) { return distance(ca[i], ca[j]); };

  std::vector<bool> helix_cond(n, false), strand_cond(n, false);
  for (size_t i = 0; i + 4 < n; ++i) {
    double d3 = d(i, i + 3), d4 = d(i, i + 4);
    helix_cond[i] = d3 >= 5.0 && d3 <= 6.4 && d4 >= 5.7 && d4 <= 7.0;
  }
  for (size_t i = 0; i + 2 < n; ++i) {
    double d2 = d(i, i + 2);
    bool in_window = d2 >= 6.4 && d2 <= 7.4;
    bool straight = true;
    if (i + 3 < n)
      straight = std::abs(pseudo_dihedral(ca[i], ca[i + 1], ca[i + 2], ca[i + 3])) >= 135.0;
    strand_cond[i] = in_window && straight;
  }

  auto mark_runs = [n](const std::vector<bool>& cond, size_t min_run, size_t span,
                       SecondaryStructure label, std::vector<SecondaryStructure>& out) {
    size_t i = 0;
    while (i < n) {
      if (!cond[i]) { ++i; continue; }
      size_t j = i;
      while (j < n && cond[j]) ++j;
      size_t run = j - i;
      if (run >= min_run) {
        size_t hi = std::min(n, j - 1 + span + 1);
        for (size_t k = i; k < hi; ++k)
          if (out[k] == SecondaryStructure::Coil) out[k] = label;
      }
      i = j;
    }
  };

  // Helix first; strand only claims residues still unassigned.
  mark_runs(helix_cond, 4, 4, SecondaryStructure::Helix, ss);
  mark_runs(strand_cond, 3, 2, SecondaryStructure::Strand, ss);
  return ss;
}

double element_radius(const std::string& element) {
  std::string e = element;
  std::transform(e.begin(), e.end(), e.begin(), ::toupper);
  if (e == "C") return 1.7;
  if (e == "N") return 1.55;
  if (e == "O") return 1.52;
  if (e == "S") return 1.8;
  return 1.7;
}

std::vector<double> compute_sasa(const std::vector<Atom>& atoms, const SasaParams& params) {
  const size_t n = atoms.size();
  std::vector<double> areas(n, 0.0);
  if (n == 0) return areas;

  const int npts = std::max(params.n_sphere_points, 92);
  const double w = params.probe_radius;

  // Golden-spiral unit sphere points, fixed in the lab frame.
  std::vector<Vec3> pts(npts);
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < npts; ++k) {
    double z = 1.0 - 2.0 * (k + 0.5) / npts;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double phi = golden * k;
    pts[k] = {r * std::cos(phi), r * std::sin(phi), z};
  }

  std::vector<double> radii(n);
  for (size_t i = 0; i < n; ++i) radii[i] = element_radius(atoms[i].element);

  for (size_t i = 0; i < n; ++i) {
    const double ri = radii[i] + w;
    // Neighbors whose inflated spheres can reach atom i's surface.
    std::vector<size_t> neighbors;
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double rj = radii[j] + w;
      if (distance(atoms[i].coords, atoms[j].coords) < ri + rj)
        neighbors.push_back(j);
    }
    int exposed = 0;
    for (int k = 0; k < npts; ++k) {
      Vec3 p = atoms[i].coords + pts[k] * ri;
      bool buried = false;
      for (size_t j : neighbors) {
        double rj = radii[j] + w;
        if (distance(p, atoms[j].coords) < rj) { buried = true; break; }
      }
      if (!buried) ++exposed;
    }
    areas[i] = 4.0 * kPi * ri * ri * exposed / npts;
  }
  return areas;
}

double max_sasa_tien(AminoAcid aa) {
  if (aa == AminoAcid::UNK) {
    static const double mean = max_sasa_mean();
    return mean;
  }
  return kMaxSasa[static_cast<int>(aa)];
}

std::vector<double> residue_rsa(const ResidueChain& chain,
                                const std::vector<double>& per_atom_sasa) {
  std::vector<double> residue_area(chain.residues.size(), 0.0);
  for (size_t a = 0; a < chain.all_atoms.size(); ++a) {
    int ridx = chain.all_atoms[a].residue_index;
    if (ridx >= 0 && static_cast<size_t>(ridx) < residue_area.size())
      residue_area[ridx] += per_atom_sasa[a];
  }
  std::vector<double> rsa(chain.residues.size(), 0.0);
  for (size_t r = 0; r < chain.residues.size(); ++r)
    rsa[r] = std::min(1.0, residue_area[r] / max_sasa_tien(chain.residues[r].aa));
  return rsa;
}

ResidueFeatures build_features(const ResidueChain& chain,
                               const std::vector<SecondaryStructure>& ss,
                               const std::vector<double>& rsa) {
  ResidueFeatures f;
  f.n_residues = chain.residues.size();
  f.values.assign(f.n_residues * ResidueFeatures::kWidth, 0.0);
  for (size_t r = 0; r < f.n_residues; ++r) {
    double* row = f.values.data() + r * ResidueFeatures::kWidth;
    AminoAcid aa = chain.residues[r].aa;
    if (aa != AminoAcid::UNK) row[static_cast<int>(aa)] = 1.0;
    switch (ss[r]) {
      case SecondaryStructure::Helix: row[20] = 1.0; break;
      case SecondaryStructure::Strand: row[21] = 1.0; break;
      case SecondaryStructure::Coil: row[22] = 1.0; break;
    }
    row[23] = rsa[r];
  }
  return f;
}

ResidueFeatures build_features(const ResidueChain& chain, const SasaParams& params) {
  if (chain.residues.empty())
    throw std::invalid_argument("build_features: empty chain");
  auto ss = assign_secondary_structure(chain);
  auto sasa = compute_sasa(chain.all_atoms, params);
  auto rsa = residue_rsa(chain, sasa);
  return build_features(chain, ss, rsa);
}

std::vector<SidecarEntry> parse_feature_sidecar(std::istream& in) {
  std::vector<SidecarEntry> entries;
  std::string line;
  size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (header) { header = false; continue; }
    std::istringstream ls(line);
    std::string chain_s, icode_s, ss_s;
    SidecarEntry e{};
    if (!(ls >> chain_s >> e.seq_num >> icode_s >> ss_s >> e.rsa))
      throw std::runtime_error("malformed sidecar line " + std::to_string(line_no));
    e.chain_id = chain_s.empty() ? ' ' : chain_s[0];
    e.icode = (icode_s == "-" || icode_s.empty()) ? ' ' : icode_s[0];
    e.ss = ss_from_char(ss_s.empty() ? 'C' : ss_s[0]);
    if (e.rsa < 0.0 || e.rsa > 1.0)
      throw std::runtime_error("sidecar rsa out of [0,1] at line " + std::to_string(line_no));
    entries.push_back(e);
  }
  return entries;
}

std::vector<SidecarEntry> parse_feature_sidecar_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sidecar: " + path);
  return parse_feature_sidecar(in);
}

ResidueFeatures build_features_with_sidecar(const ResidueChain& chain,
                                            const std::vector<SidecarEntry>& sidecar) {
  std::vector<SecondaryStructure> ss(chain.residues.size(), SecondaryStructure::Coil);
  std::vector<double> rsa(chain.residues.size(), 0.0);
  for (size_t r = 0; r < chain.residues.size(); ++r) {
    const Residue& res = chain.residues[r];
    for (const SidecarEntry& e : sidecar) {
      if (e.chain_id == chain.chain_id && e.seq_num == res.seq_num && e.icode == res.icode) {
        ss[r] = e.ss;
        rsa[r] = e.rsa;
        break;
      }
    }
  }
  return build_features(chain, ss, rsa);
}

}  // namespace contactnet
