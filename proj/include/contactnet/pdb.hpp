#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "contactnet/linalg.hpp"

namespace contactnet {

// Canonical amino acids, alphabetical by three-letter code. UNK = 20.
enum class AminoAcid : uint8_t {
  ALA, ARG, ASN, ASP, CYS, GLN, GLU, GLY, HIS, ILE,
  LEU, LYS, MET, PHE, PRO, SER, THR, TRP, TYR, VAL,
  UNK
};
constexpr int kNumAminoAcids = 20;

AminoAcid aa_from_three_letter(const std::string& code);
const char* aa_three_letter(AminoAcid aa);
char aa_one_letter(AminoAcid aa);

struct Atom {
  int serial = 0;
  std::string name;          // e.g. "CA"
  std::string element;       // "C", "N", ... empty if unknown
  int residue_index = -1;    // index into parent chain's residues
  Vec3 coords;
  char altloc = ' ';
};

struct Residue {
  AminoAcid aa = AminoAcid::UNK;
  Vec3 ca;
  int seq_num = 0;
  char icode = ' ';
};

struct ResidueChain {
  char chain_id = ' ';
  std::vector<Residue> residues;   // ordered by (seq_num, icode)
  std::vector<Atom> all_atoms;     // residue_index points into residues
  int dropped_no_ca = 0;           // residues discarded for missing CA

  size_t size() const { return residues.size(); }
};

struct PdbParseError : std::runtime_error {
  size_t line = 0;
  PdbParseError(const std::string& msg, size_t line_number);
};

// PDB 3.3 fixed-column ATOM/HETATM records, first model only.
// Altloc policy: keep blank or 'A'. Residues without a CA are dropped
// (counted in dropped_no_ca). HETATM is skipped except recognized
// modified residues (MSE -> MET).
std::vector<ResidueChain> parse_pdb(std::istream& in);
std::vector<ResidueChain> parse_pdb(const std::string& text);
std::vector<ResidueChain> parse_pdb_file(const std::string& path);

void write_pdb(const std::vector<ResidueChain>& chains, std::ostream& out);
std::string write_pdb(const std::vector<ResidueChain>& chains);

// Coordinates mapped x -> R*x + t; sequence and ordering untouched.
ResidueChain apply_transform(const ResidueChain& chain, const RigidTransform& t);

std::vector<Vec3> ca_coords(const ResidueChain& chain);

// One decoy pose from a transform table line.
struct DecoyTransform {
  std::string model_id;
  RigidTransform transform;
};

// Table format: mandatory header "#euler-zyx-rad", then per line
// `model_id a b c tx ty tz` (intrinsic Z-Y-X Euler, radians, lab origin).
std::vector<DecoyTransform> parse_transform_table(std::istream& in);
std::vector<DecoyTransform> parse_transform_table_file(const std::string& path);
void write_transform_table(const std::vector<DecoyTransform>& rows, std::ostream& out);

}  // namespace contactnet
