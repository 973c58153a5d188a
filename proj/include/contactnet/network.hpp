#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "contactnet/features.hpp"
#include "contactnet/geometry.hpp"
#include "contactnet/tensor.hpp"

namespace contactnet {

struct HyperParams {
  int d_model = 64;
  int n_enc_layers = 2;
  int n_heads = 4;
  int segment_half_length = 10;  // L: residues in each chain direction
  int max_contacts = 8;          // K: segment pairs kept by NMS
  double contact_cutoff = 16.0;  // Angstrom, neighbor graph and NMS candidates
  int d_contact = 128;           // contact descriptor width
  int n_tx_layers = 2;
  int ffn_mult = 4;
  int d_in = 24;                 // residue feature width
  int conv1_channels = 64;
  int conv2_channels = 128;
  int conv3_channels = 128;
  int head_hidden = 64;

  int segment_len() const { return 2 * segment_half_length + 1; }
  void validate() const;
  bool operator==(const HyperParams&) const = default;
};

struct NamedTensor {
  std::string name;
  Tensor<double> value;
  bool decay = true;  // false for biases and layer-norm gains/shifts
};

// The complete parameter set. Tensor order is the fixed manifest order; the
// same order drives serialization and optimizer state.
struct ModelWeights {
  HyperParams hp;
  std::vector<NamedTensor> tensors;

  const Tensor<double>& find(const std::string& name) const;
  Tensor<double>& find(const std::string& name);
};

// Manifest entries (name, shape, decay flag) implied by the hyperparameters.
struct ManifestEntry {
  std::string name;
  std::vector<int> shape;
  bool decay;
};
std::vector<ManifestEntry> weights_manifest(const HyperParams& hp);

// Fan-in-scaled uniform for linear/conv kernels, zeros for biases, ones/zeros
// for layer norm, N(0, 0.02) for the classification token.
ModelWeights init_weights(const HyperParams& hp, uint64_t seed);

// One interacting segment pair: receptor residue i, ligand residue j, and
// their CA distance.
struct Contact {
  int rec_index;
  int lig_index;
  double distance;
};

// Sorted ascending by distance. Selection guarantees pairwise
// |di| > 2L and |dj| > 2L; every distance < cutoff.
struct ContactSet {
  std::vector<Contact> contacts;
  bool empty() const { return contacts.empty(); }
  size_t size() const { return contacts.size(); }
};

// Greedy minimum selection over the inter-protein distogram: take the global
// minimum cell < cutoff, suppress every cell with |di| <= 2L or |dj| <= 2L,
// repeat up to K picks. Distance ties break on smaller (i, then j).
ContactSet contact_nms(const Distogram& inter, int segment_half_length,
                       int max_contacts, double cutoff);

// Tape-side handle to registered weights.
template <class T>
struct TapeWeights {
  std::unordered_map<std::string, int> ids;
  int at(const std::string& name) const {
    auto it = ids.find(name);
    if (it == ids.end()) throw std::logic_error("unknown weight tensor: " + name);
    return it->second;
  }
};

template <class T>
TapeWeights<T> register_weights(Tape<T>& tape, const ModelWeights& w, bool requires_grad);

// One distance-aware graph-attention encoder block (attention + FFN, each
// with residual and layer norm). invd and mask are constant node ids.
template <class T>
int distance_aware_attention(Tape<T>& tape, const TapeWeights<T>& w,
                             const HyperParams& hp, const std::string& prefix,
                             int x, int invd, int mask);

// Input projection followed by the encoder stack; returns the (n, d_model)
// embedding node. One shared stack serves both proteins.
template <class T>
int encode_protein(Tape<T>& tape, const TapeWeights<T>& w, const HyperParams& hp,
                   const ResidueFeatures& features, const Distogram& intra);

// (2L+1, d) rows around `center`, zero rows past the termini.
template <class T>
int extract_segment(Tape<T>& tape, int embeddings, int center, int segment_half_length);

// E(s,t) = [seg_rec_s ; seg_lig_t] -> (2L+1, 2L+1, 2d).
template <class T>
int build_interaction_descriptor(Tape<T>& tape, int seg_rec, int seg_lig);

// CNN encoder: conv/relu/pool x2, conv/relu, global mean pool, projection.
// Returns a (1, d_contact) node.
template <class T>
int encode_contact(Tape<T>& tape, const TapeWeights<T>& w, const HyperParams& hp,
                   int descriptor);

// Order-invariant classification transformer over [cls] ++ contact tokens.
// `valid` marks real tokens; padded slots are masked out of every softmax.
// Returns the (1,1) logit node.
template <class T>
int interaction_transformer(Tape<T>& tape, const TapeWeights<T>& w, const HyperParams& hp,
                            const std::vector<int>& contact_tokens,
                            const std::vector<bool>& valid);

template <class T>
struct ForwardResult {
  int logit_id = -1;       // -1 when no contacts
  bool no_contact = false;
  ContactSet contacts;
};

// Full differentiable pipeline on an existing tape with registered weights.
template <class T>
ForwardResult<T> forward_complex(Tape<T>& tape, const TapeWeights<T>& w,
                                 const HyperParams& hp,
                                 const ResidueFeatures& rec_features,
                                 const std::vector<Vec3>& rec_ca,
                                 const ResidueFeatures& lig_features,
                                 const std::vector<Vec3>& lig_ca);

struct ScoreDiagnostics {
  ContactSet contacts;
  bool no_contact = false;
  double logit = 0.0;
};

// sigmoid(logit) in [0,1]; an empty contact set short-circuits to 0.
template <class T>
double score_complex(const ModelWeights& weights,
                     const ResidueFeatures& rec_features, const std::vector<Vec3>& rec_ca,
                     const ResidueFeatures& lig_features, const std::vector<Vec3>& lig_ca,
                     ScoreDiagnostics* diag = nullptr);

// Inference split: chain embeddings depend only on intra-chain distances, so
// rigid decoys of one case share them.
template <class T>
Tensor<T> encode_protein_values(const ModelWeights& weights,
                                const ResidueFeatures& features,
                                const std::vector<Vec3>& ca);

template <class T>
double score_from_embeddings(const ModelWeights& weights, const Tensor<T>& rec_embedding,
                             const std::vector<Vec3>& rec_ca, const Tensor<T>& lig_embedding,
                             const std::vector<Vec3>& lig_ca, ScoreDiagnostics* diag = nullptr);

// ---- weights file (CNWT) ----

enum class WeightsIoErrorKind { Magic, Version, Manifest, ShapeMismatch, Truncated };

struct WeightsIoError : std::runtime_error {
  WeightsIoErrorKind kind;
  WeightsIoError(WeightsIoErrorKind k, const std::string& msg)
      : std::runtime_error(msg), kind(k) {}
};

// Layout: "CNWT" magic, u16 LE format version, u32 LE manifest byte length,
// UTF-8 JSON manifest {hyperparams, tensors: name/shape/offset}, then raw
// f32 LE payload in manifest order. Offsets are bytes into the payload.
void save_weights(const ModelWeights& weights, const std::string& path);
ModelWeights load_weights(const std::string& path);
// Like load_weights, but the file must match `expected`; names the first
// mismatching tensor otherwise.
ModelWeights load_weights(const std::string& path, const HyperParams& expected);

}  // namespace contactnet
