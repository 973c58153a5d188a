#pragma once

#include <set>
#include <string>
#include <vector>

#include "contactnet/features.hpp"
#include "contactnet/geometry.hpp"

namespace contactnet {

enum class CapriClass : uint8_t { Incorrect = 0, Acceptable = 1, Medium = 2, High = 3 };

const char* capri_class_name(CapriClass c);

// Each rule is an OR over the two RMSDs:
//   High        lrmsd < 1  or irmsd < 1
//   Medium      lrmsd < 5  or irmsd < 2
//   Acceptable  lrmsd < 10 or irmsd < 4
CapriClass capri_classify(double lrmsd, double irmsd);

// Ligand CA RMSD after superposing the model receptor onto the native one.
double ligand_rmsd(const std::vector<Vec3>& model_rec, const std::vector<Vec3>& model_lig,
                   const std::vector<Vec3>& native_rec, const std::vector<Vec3>& native_lig);

// CA RMSD over the native-defined interface (CA-CA < 10 A), superposed on
// that interface. Throws when the native interface is empty.
double interface_rmsd(const std::vector<Vec3>& model_rec, const std::vector<Vec3>& model_lig,
                      const std::vector<Vec3>& native_rec, const std::vector<Vec3>& native_lig,
                      double interface_cutoff = 10.0);

struct DecoyAssessment {
  double lrmsd = 0.0;
  double irmsd = 0.0;
  CapriClass capri = CapriClass::Incorrect;
  double epitope_recall = 0.0;
  double epitope_precision = 0.0;
};

DecoyAssessment assess_decoy(const std::vector<Vec3>& model_rec,
                             const std::vector<Vec3>& model_lig,
                             const std::vector<Vec3>& native_rec,
                             const std::vector<Vec3>& native_lig);

// Fraction of cases whose top N (by the provided ranking) contain at least
// one decoy of class >= Acceptable.
double success_rate(const std::vector<std::vector<CapriClass>>& ranked_cases, int top_n);

// Count of class >= Acceptable within this case's top N.
int hit_rate(const std::vector<CapriClass>& ranked_case, int top_n);

// Residues whose SASA drops from the isolated component to the assembled
// complex by more than `tau`. The complex is component.all_atoms plus
// `environment_atoms` (the partner chains).
std::set<size_t> sasa_interface(const ResidueChain& component,
                                const std::vector<Atom>& environment_atoms,
                                const SasaParams& params = {}, double tau = 0.1);

struct EpitopeMetrics {
  double recall = 0.0;
  double precision = 0.0;
  bool correct = false;  // recall >= 0.5 and precision >= 0.5
};

// Both sets index the same antigen residue space; an empty native interface
// is undefined and throws.
EpitopeMetrics epitope_metrics(const std::set<size_t>& model_interface,
                               const std::set<size_t>& native_interface);

}  // namespace contactnet
