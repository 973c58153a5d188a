#pragma once

#include <random>
#include <string>
#include <vector>

#include "contactnet/pdb.hpp"

namespace contactnet::synthetic {

// Ideal helical CA trace: rise per residue, turn in degrees, radius in A.
std::vector<Vec3> helix_trace(int n, double rise = 1.5, double turn_deg = 100.0,
                              double radius = 2.3);

// Planar zigzag with constant CA-CA spacing, extended along z.
std::vector<Vec3> zigzag_trace(int n, double spacing = 3.8, double amplitude = 1.0);

// Random walk trace with fixed step length; may self-intersect.
std::vector<Vec3> random_walk_trace(int n, std::mt19937_64& rng, double step = 3.8);

ResidueChain ca_chain(char chain_id, const std::vector<Vec3>& ca,
                      const std::vector<AminoAcid>& aa);
ResidueChain ca_chain(char chain_id, const std::vector<Vec3>& ca, AminoAcid aa);

// Chain with approximate N/CA/C/O backbone atoms per residue, for SASA work.
ResidueChain backbone_chain(char chain_id, const std::vector<Vec3>& ca,
                            const std::vector<AminoAcid>& aa);

// Random two-chain complexes for property fuzzing.
struct RandomComplex {
  ResidueChain receptor;
  ResidueChain ligand;
};
RandomComplex random_complex(std::mt19937_64& rng, int rec_len = 18, int lig_len = 14,
                             double gap = 5.0);

// A deterministic docking micro-corpus: six cases, 32 decoys total
// (13 positives), each case a two-site receptor where positives touch the
// alanine site and negatives the tryptophan site. Writes per-case PDBs,
// transform tables, external score TSVs, and a pipeline config. Returns the
// config path.
std::string write_micro_corpus(const std::string& dir, uint64_t seed = 11);

}  // namespace contactnet::synthetic
