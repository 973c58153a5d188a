#include "contactnet/assessment.hpp"

#include <algorithm>
#include <stdexcept>

namespace contactnet {

const char* capri_class_name(CapriClass c) {
  switch (c) {
    case CapriClass::High: return "High";
    case CapriClass::Medium: return "Medium";
    case CapriClass::Acceptable: return "Acceptable";
    default: return "Incorrect";
  }
}

CapriClass capri_classify(double lrmsd, double irmsd) {
  if (lrmsd < 0.0 || irmsd < 0.0)
    throw std::invalid_argument("capri_classify: rmsd values must be >= 0");
  if (lrmsd < 1.0 || irmsd < 1.0) return CapriClass::High;
  if (lrmsd < 5.0 || irmsd < 2.0) return CapriClass::Medium;
  if (lrmsd < 10.0 || irmsd < 4.0) return CapriClass::Acceptable;
  return CapriClass::Incorrect;
}

double ligand_rmsd(const std::vector<Vec3>& model_rec, const std::vector<Vec3>& model_lig,
                   const std::vector<Vec3>& native_rec, const std::vector<Vec3>& native_lig) {
  if (model_rec.size() != native_rec.size() || model_lig.size() != native_lig.size())
    throw std::invalid_argument("ligand_rmsd: model/native size mismatch");
  KabschResult sup = kabsch(model_rec, native_rec);
  std::vector<Vec3> moved(model_lig.size());
  for (size_t i = 0; i < model_lig.size(); ++i) moved[i] = sup.transform.apply(model_lig[i]);
  return rmsd(moved, native_lig);
}

namespace {

std::vector<Vec3> gather(const std::vector<Vec3>& rec, const std::vector<Vec3>& lig,
                         const std::vector<size_t>& rec_idx,
                         const std::vector<size_t>& lig_idx) {
  std::vector<Vec3> out;
  out.reserve(rec_idx.size() + lig_idx.size());
  for (size_t i : rec_idx) out.push_back(rec[i]);
  for (size_t j : lig_idx) out.push_back(lig[j]);
  return out;
}

}  // namespace

double interface_rmsd(const std::vector<Vec3>& model_rec, const std::vector<Vec3>& model_lig,
                      const std::vector<Vec3>& native_rec, const std::vector<Vec3>& native_lig,
                      double interface_cutoff) {
  if (model_rec.size() != native_rec.size() || model_lig.size() != native_lig.size())
    throw std::invalid_argument("interface_rmsd: model/native size mismatch");

  std::vector<size_t> rec_idx, lig_idx;
  std::vector<uint8_t> lig_hit(native_lig.size(), 0);
  for (size_t i = 0; i < native_rec.size(); ++i) {
    bool hit = false;
    for (size_t j = 0; j < native_lig.size(); ++j)
      if (distance(native_rec[i], native_lig[j]) < interface_cutoff) {
        hit = true;
        lig_hit[j] = 1;
      }
    if (hit) rec_idx.push_back(i);
  }
  for (size_t j = 0; j < native_lig.size(); ++j)
    if (lig_hit[j]) lig_idx.push_back(j);

  if (rec_idx.empty() && lig_idx.empty())
    throw std::runtime_error("interface_rmsd: native complex has no interface");

  std::vector<Vec3> native_iface = gather(native_rec, native_lig, rec_idx, lig_idx);
  std::vector<Vec3> model_iface = gather(model_rec, model_lig, rec_idx, lig_idx);
  if (native_iface.size() < 3)
    throw std::runtime_error("interface_rmsd: interface too small to superpose");
  return kabsch(model_iface, native_iface).rmsd;
}

DecoyAssessment assess_decoy(const std::vector<Vec3>& model_rec,
                             const std::vector<Vec3>& model_lig,
                             const std::vector<Vec3>& native_rec,
                             const std::vector<Vec3>& native_lig) {
  DecoyAssessment a;
  a.lrmsd = ligand_rmsd(model_rec, model_lig, native_rec, native_lig);
  a.irmsd = interface_rmsd(model_rec, model_lig, native_rec, native_lig);
  a.capri = capri_classify(a.lrmsd, a.irmsd);
  return a;
}

double success_rate(const std::vector<std::vector<CapriClass>>& ranked_cases, int top_n) {
  if (top_n < 1) throw std::invalid_argument("success_rate: N must be >= 1");
  if (ranked_cases.empty())
    throw std::invalid_argument("success_rate: no cases");
  int hits = 0;
  for (const auto& c : ranked_cases) {
    int limit = std::min<int>(top_n, static_cast<int>(c.size()));
    for (int i = 0; i < limit; ++i)
      if (c[i] >= CapriClass::Acceptable) {
        ++hits;
        break;
      }
  }
  return static_cast<double>(hits) / ranked_cases.size();
}

int hit_rate(const std::vector<CapriClass>& ranked_case, int top_n) {
  int limit = std::min<int>(top_n, static_cast<int>(ranked_case.size()));
  int count = 0;
  for (int i = 0; i < limit; ++i)
    if (ranked_case[i] >= CapriClass::Acceptable) ++count;
  return count;
}

std::set<size_t> sasa_interface(const ResidueChain& component,
                                const std::vector<Atom>& environment_atoms,
                                const SasaParams& params, double tau) {
  std::vector<double> comp_sasa = compute_sasa(component.all_atoms, params);
  std::vector<double> comp_residue(component.residues.size(), 0.0);
  for (size_t a = 0; a < component.all_atoms.size(); ++a)
    comp_residue[component.all_atoms[a].residue_index] += comp_sasa[a];

  std::vector<Atom> assembled = component.all_atoms;
  assembled.insert(assembled.end(), environment_atoms.begin(), environment_atoms.end());
  std::vector<double> cplx_sasa = compute_sasa(assembled, params);
  std::vector<double> cplx_residue(component.residues.size(), 0.0);
  for (size_t a = 0; a < component.all_atoms.size(); ++a)
    cplx_residue[component.all_atoms[a].residue_index] += cplx_sasa[a];

  std::set<size_t> interface;
  for (size_t r = 0; r < component.residues.size(); ++r)
    if (cplx_residue[r] < comp_residue[r] - tau) interface.insert(r);
  return interface;
}

EpitopeMetrics epitope_metrics(const std::set<size_t>& model_interface,
                               const std::set<size_t>& native_interface) {
  if (native_interface.empty())
    throw std::runtime_error("epitope_metrics: native interface undefined (empty)");
  EpitopeMetrics m;
  size_t overlap = 0;
  for (size_t r : model_interface)
    if (native_interface.count(r)) ++overlap;
  m.recall = static_cast<double>(overlap) / native_interface.size();
  m.precision = model_interface.empty()
                    ? 0.0
                    : static_cast<double>(overlap) / model_interface.size();
  m.correct = m.recall >= 0.5 && m.precision >= 0.5;
  return m;
}

}  // namespace contactnet
