#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "contactnet/pdb.hpp"

namespace contactnet {

enum class SecondaryStructure : uint8_t { Helix, Strand, Coil };

char ss_to_char(SecondaryStructure ss);
SecondaryStructure ss_from_char(char c);

// CA-geometry assignment (P-SEA style windows):
//   helix:  d(i,i+3) in [5.0,6.4] and d(i,i+4) in [5.7,7.0], run >= 4
//   strand: d(i,i+2) in [6.4,7.4] with |pseudo-dihedral| >= 135 deg, run >= 3
// Chains shorter than 5 residues are all coil.
std::vector<SecondaryStructure> assign_secondary_structure(const ResidueChain& chain);

struct SasaParams {
  double probe_radius = 1.4;  // Angstrom
  int n_sphere_points = 960;  // golden-spiral point count, >= 92
};

double element_radius(const std::string& element);

// Shrake-Rupley with a deterministic golden-spiral point set held in the
// lab frame. area(atom) = 4*pi*(r+w)^2 * exposed/total.
std::vector<double> compute_sasa(const std::vector<Atom>& atoms,
                                 const SasaParams& params = {});

double max_sasa_tien(AminoAcid aa);  // theoretical max, UNK -> table mean

// Per-residue relative solvent accessibility in [0,1], from per-atom SASA
// of the isolated chain.
std::vector<double> residue_rsa(const ResidueChain& chain,
                                const std::vector<double>& per_atom_sasa);

// n x 24 row-major: cols 0-19 one-hot amino acid, 20-22 one-hot SS (H,E,C),
// 23 RSA.
struct ResidueFeatures {
  size_t n_residues = 0;
  std::vector<double> values;  // n_residues * 24

  static constexpr int kWidth = 24;
  double at(size_t residue, int col) const { return values[residue * kWidth + col]; }
};

ResidueFeatures build_features(const ResidueChain& chain,
                               const SasaParams& params = {});
ResidueFeatures build_features(const ResidueChain& chain,
                               const std::vector<SecondaryStructure>& ss,
                               const std::vector<double>& rsa);

// Sidecar TSV: header then chain_id, seq_num, icode ('-' for blank),
// ss in {H,E,C}, rsa in [0,1].
struct SidecarEntry {
  char chain_id;
  int seq_num;
  char icode;
  SecondaryStructure ss;
  double rsa;
};

std::vector<SidecarEntry> parse_feature_sidecar(std::istream& in);
std::vector<SidecarEntry> parse_feature_sidecar_file(const std::string& path);

// Features with SS/RSA taken from the sidecar; residues missing from the
// sidecar get coil/0.
ResidueFeatures build_features_with_sidecar(const ResidueChain& chain,
                                            const std::vector<SidecarEntry>& sidecar);

}  // namespace contactnet
