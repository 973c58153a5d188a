#include "contactnet/pdb.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace contactnet {

namespace {

constexpr std::array<const char*, 21> kThreeLetter = {
    "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE",
    "LEU", "LYS", "MET", "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL",
    "UNK"};

constexpr std::array<char, 21> kOneLetter = {
    'A', 'R', 'N', 'D', 'C', 'Q', 'E', 'G', 'H', 'I',
    'L', 'K', 'M', 'F', 'P', 'S', 'T', 'W', 'Y', 'V', 'X'};

std::string strip(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Fixed-column field, tolerant of short lines.
std::string field(const std::string& line, size_t col0, size_t len) {
  if (line.size() <= col0) return "";
  return line.substr(col0, std::min(len, line.size() - col0));
}

double parse_coord(const std::string& line, size_t col0, size_t line_no) {
  std::string raw = strip(field(line, col0, 8));
  if (raw.empty())
    throw PdbParseError("missing coordinate field", line_no);
  try {
    size_t pos = 0;
    double v = std::stod(raw, &pos);
    if (pos != raw.size() || !std::isfinite(v))
      throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw PdbParseError("malformed coordinate field '" + raw + "'", line_no);
  }
}

// Modified residues kept for parsing, mapped to a canonical parent.
const std::map<std::string, std::string>& modified_residue_map() {
  static const std::map<std::string, std::string> m = {{"MSE", "MET"}};
  return m;
}

struct RawResidue {
  char chain_id;
  int seq_num;
  char icode;
  AminoAcid aa;
  std::vector<Atom> atoms;  // residue_index unset until chain assembly
  std::optional<Vec3> ca;
};

}  // namespace

PdbParseError::PdbParseError(const std::string& msg, size_t line_number)
    : std::runtime_error(msg + " (line " + std::to_string(line_number) + ")"),
      line(line_number) {}

AminoAcid aa_from_three_letter(const std::string& code) {
  for (int i = 0; i < kNumAminoAcids; ++i)
    if (code == kThreeLetter[i]) return static_cast<AminoAcid>(i);
  return AminoAcid::UNK;
}

const char* aa_three_letter(AminoAcid aa) {
  return kThreeLetter[static_cast<int>(aa)];
}

char aa_one_letter(AminoAcid aa) { return kOneLetter[static_cast<int>(aa)]; }

std::vector<ResidueChain> parse_pdb(std::istream& in) {
  std::vector<RawResidue> raw;
  std::map<std::pair<char, std::pair<int, char>>, size_t> index;
  std::string line;
  size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    std::string rec = field(line, 0, 6);
    if (rec.rfind("ENDMDL", 0) == 0) break;  // first model only
    bool is_atom = rec.rfind("ATOM", 0) == 0;
    bool is_het = rec.rfind("HETATM", 0) == 0;
    if (!is_atom && !is_het) continue;

    char altloc = line.size() > 16 ? line[16] : ' ';
    if (altloc != ' ' && altloc != 'A') continue;

    std::string res_name = strip(field(line, 17, 3));
    if (is_het) {
      auto it = modified_residue_map().find(res_name);
      if (it == modified_residue_map().end()) continue;
      res_name = it->second;
    }

    char chain_id = line.size() > 21 ? line[21] : ' ';
    std::string seq_raw = strip(field(line, 22, 4));
    int seq_num = 0;
    if (!seq_raw.empty()) {
      auto [p, ec] = std::from_chars(seq_raw.data(), seq_raw.data() + seq_raw.size(), seq_num);
      if (ec != std::errc() || p != seq_raw.data() + seq_raw.size())
        throw PdbParseError("malformed residue sequence number '" + seq_raw + "'", line_no);
    }
    char icode = line.size() > 26 ? line[26] : ' ';

    Atom atom;
    std::string serial_raw = strip(field(line, 6, 5));
    atom.serial = serial_raw.empty() ? 0 : std::atoi(serial_raw.c_str());
    atom.name = strip(field(line, 12, 4));
    atom.coords = {parse_coord(line, 30, line_no), parse_coord(line, 38, line_no),
                   parse_coord(line, 46, line_no)};
    atom.element = strip(field(line, 76, 2));
    if (atom.element.empty() && !atom.name.empty())
      atom.element = std::string(1, atom.name[0]);  // fall back to name prefix
    atom.altloc = altloc;

    auto key = std::make_pair(chain_id, std::make_pair(seq_num, icode));
    auto it = index.find(key);
    if (it == index.end()) {
      RawResidue r;
      r.chain_id = chain_id;
      r.seq_num = seq_num;
      r.icode = icode;
      r.aa = aa_from_three_letter(res_name);
      index.emplace(key, raw.size());
      raw.push_back(std::move(r));
      it = index.find(key);
    }
    RawResidue& res = raw[it->second];
    if (atom.name == "CA" && !res.ca) res.ca = atom.coords;
    res.atoms.push_back(std::move(atom));
  }

  // Assemble per-chain, residues ordered by (seq_num, icode).
  std::vector<char> chain_order;
  for (const RawResidue& r : raw)
    if (std::find(chain_order.begin(), chain_order.end(), r.chain_id) == chain_order.end())
      chain_order.push_back(r.chain_id);

  std::vector<ResidueChain> chains;
  for (char cid : chain_order) {
    std::vector<const RawResidue*> members;
    for (const RawResidue& r : raw)
      if (r.chain_id == cid) members.push_back(&r);
    std::stable_sort(members.begin(), members.end(),
                     [](const RawResidue* a, const RawResidue* b) {
                       if (a->seq_num != b->seq_num) return a->seq_num < b->seq_num;
                       return a->icode < b->icode;
                     });
    ResidueChain chain;
    chain.chain_id = cid;
    for (const RawResidue* r : members) {
      if (!r->ca) {
        ++chain.dropped_no_ca;
        continue;
      }
      int ridx = static_cast<int>(chain.residues.size());
      chain.residues.push_back({r->aa, *r->ca, r->seq_num, r->icode});
      for (Atom a : r->atoms) {
        a.residue_index = ridx;
        chain.all_atoms.push_back(std::move(a));
      }
    }
    if (!chain.residues.empty()) chains.push_back(std::move(chain));
  }

  if (chains.empty())
    throw PdbParseError("no parsable residues in input", line_no);
  return chains;
}

std::vector<ResidueChain> parse_pdb(const std::string& text) {
  std::istringstream in(text);
  return parse_pdb(in);
}

std::vector<ResidueChain> parse_pdb_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open PDB file: " + path);
  return parse_pdb(in);
}

void write_pdb(const std::vector<ResidueChain>& chains, std::ostream& out) {
  int serial = 0;
  for (const ResidueChain& chain : chains) {
    for (const Atom& a : chain.all_atoms) {
      const Residue& res = chain.residues[a.residue_index];
      ++serial;
      std::string name = a.name;
      // Column 13 is blank for single-letter elements with short names.
      std::string padded = name.size() < 4 ? " " + name : name;
      padded.resize(4, ' ');
      char buf[96];
      std::snprintf(buf, sizeof(buf),
                    "ATOM  %5d %s%c%3s %c%4d%c   %8.3f%8.3f%8.3f%6.2f%6.2f          %2s\n",
                    serial, padded.c_str(), ' ', aa_three_letter(res.aa),
                    chain.chain_id, res.seq_num, res.icode, a.coords.x,
                    a.coords.y, a.coords.z, 1.0, 0.0, a.element.c_str());
      out << buf;
    }
    out << "TER\n";
  }
  out << "END\n";
}

std::string write_pdb(const std::vector<ResidueChain>& chains) {
  std::ostringstream out;
  write_pdb(chains, out);
  return out.str();
}

ResidueChain apply_transform(const ResidueChain& chain, const RigidTransform& t) {
  ResidueChain out = chain;
  for (Residue& r : out.residues) r.ca = t.apply(r.ca);
  for (Atom& a : out.all_atoms) a.coords = t.apply(a.coords);
  return out;
}

std::vector<Vec3> ca_coords(const ResidueChain& chain) {
  std::vector<Vec3> out;
  out.reserve(chain.residues.size());
  for (const Residue& r : chain.residues) out.push_back(r.ca);
  return out;
}

std::vector<DecoyTransform> parse_transform_table(std::istream& in) {
  std::string line;
  size_t line_no = 0;
  bool header_seen = false;
  std::vector<DecoyTransform> rows;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = strip(line);
    if (s.empty()) continue;
    if (!header_seen) {
      if (s != "#euler-zyx-rad")
        throw std::runtime_error(
            "transform table must start with '#euler-zyx-rad' header");
      header_seen = true;
      continue;
    }
    if (s[0] == '#') continue;
    std::istringstream ls(s);
    DecoyTransform d;
    double a, b, c, tx, ty, tz;
    if (!(ls >> d.model_id >> a >> b >> c >> tx >> ty >> tz))
      throw std::runtime_error("malformed transform table line " +
                               std::to_string(line_no));
    d.transform.rotation = euler_zyx(a, b, c);
    d.transform.translation = {tx, ty, tz};
    rows.push_back(std::move(d));
  }
  if (!header_seen)
    throw std::runtime_error("transform table missing '#euler-zyx-rad' header");
  return rows;
}

std::vector<DecoyTransform> parse_transform_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open transform table: " + path);
  return parse_transform_table(in);
}

void write_transform_table(const std::vector<DecoyTransform>& rows, std::ostream& out) {
  // Not a general inverse of parse: emits Euler angles recovered from R.
  out << "#euler-zyx-rad\n";
  for (const DecoyTransform& d : rows) {
    const Mat3& r = d.transform.rotation;
    double b = std::asin(-r(2, 0));
    double a = std::atan2(r(1, 0), r(0, 0));
    double c = std::atan2(r(2, 1), r(2, 2));
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s %.17g %.17g %.17g %.17g %.17g %.17g\n",
                  d.model_id.c_str(), a, b, c, d.transform.translation.x,
                  d.transform.translation.y, d.transform.translation.z);
    out << buf;
  }
}

}  // namespace contactnet
