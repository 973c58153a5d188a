#include "contactnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace contactnet {

void HyperParams::validate() const {
  if (d_model % n_heads != 0)
    throw std::invalid_argument("hyperparams: d_model must be divisible by n_heads");
  if (d_contact % n_heads != 0)
    throw std::invalid_argument("hyperparams: d_contact must be divisible by n_heads");
  if (max_contacts < 1) throw std::invalid_argument("hyperparams: max_contacts >= 1");
  if (segment_half_length < 0)
    throw std::invalid_argument("hyperparams: segment_half_length >= 0");
  if (d_in < 1 || d_model < 1 || d_contact < 1)
    throw std::invalid_argument("hyperparams: widths must be positive");
}

const Tensor<double>& ModelWeights::find(const std::string& name) const {
  for (const NamedTensor& t : tensors)
    if (t.name == name) return t.value;
  throw std::logic_error("weights: no tensor named " + name);
}

Tensor<double>& ModelWeights::find(const std::string& name) {
  for (NamedTensor& t : tensors)
    if (t.name == name) return t.value;
  throw std::logic_error("weights: no tensor named " + name);
}

std::vector<ManifestEntry> weights_manifest(const HyperParams& hp) {
  hp.validate();
  std::vector<ManifestEntry> m;
  auto w = [&](const std::string& name, std::vector<int> shape) {
    m.push_back({name, std::move(shape), true});
  };
  auto b = [&](const std::string& name, std::vector<int> shape) {
    m.push_back({name, std::move(shape), false});
  };

  const int d = hp.d_model, dc = hp.d_contact;
  w("input_proj.w", {hp.d_in, d});
  b("input_proj.b", {d});
  for (int l = 0; l < hp.n_enc_layers; ++l) {
    std::string p = "enc." + std::to_string(l) + ".";
    for (const char* nm : {"wq", "wk", "wv", "wo"}) w(p + "attn." + nm, {d, d});
    for (const char* nm : {"bq", "bk", "bv", "bo"}) b(p + "attn." + nm, {d});
    b(p + "ln1.g", {d});
    b(p + "ln1.b", {d});
    w(p + "ffn.w1", {d, d * hp.ffn_mult});
    b(p + "ffn.b1", {d * hp.ffn_mult});
    w(p + "ffn.w2", {d * hp.ffn_mult, d});
    b(p + "ffn.b2", {d});
    b(p + "ln2.g", {d});
    b(p + "ln2.b", {d});
  }
  w("cnn.conv1.k", {3, 3, 2 * d, hp.conv1_channels});
  b("cnn.conv1.b", {hp.conv1_channels});
  w("cnn.conv2.k", {3, 3, hp.conv1_channels, hp.conv2_channels});
  b("cnn.conv2.b", {hp.conv2_channels});
  w("cnn.conv3.k", {3, 3, hp.conv2_channels, hp.conv3_channels});
  b("cnn.conv3.b", {hp.conv3_channels});
  w("contact_proj.w", {hp.conv3_channels, dc});
  b("contact_proj.b", {dc});
  for (int l = 0; l < hp.n_tx_layers; ++l) {
    std::string p = "tx." + std::to_string(l) + ".";
    for (const char* nm : {"wq", "wk", "wv", "wo"}) w(p + "attn." + nm, {dc, dc});
    for (const char* nm : {"bq", "bk", "bv", "bo"}) b(p + "attn." + nm, {dc});
    b(p + "ln1.g", {dc});
    b(p + "ln1.b", {dc});
    w(p + "ffn.w1", {dc, dc * hp.ffn_mult});
    b(p + "ffn.b1", {dc * hp.ffn_mult});
    w(p + "ffn.w2", {dc * hp.ffn_mult, dc});
    b(p + "ffn.b2", {dc});
    b(p + "ln2.g", {dc});
    b(p + "ln2.b", {dc});
  }
  w("cls_token", {1, dc});
  w("head.w1", {dc, hp.head_hidden});
  b("head.b1", {hp.head_hidden});
  w("head.w2", {hp.head_hidden, 1});
  b("head.b2", {1});
  return m;
}

namespace {

int64_t fan_in(const ManifestEntry& e) {
  if (e.shape.size() == 2) return e.shape[0];
  if (e.shape.size() == 4)
    return static_cast<int64_t>(e.shape[0]) * e.shape[1] * e.shape[2];
  return e.shape.empty() ? 1 : e.shape[0];
}

bool is_layer_norm(const std::string& name) {
  return name.find(".ln") != std::string::npos;
}

}  // namespace

ModelWeights init_weights(const HyperParams& hp, uint64_t seed) {
  ModelWeights w;
  w.hp = hp;
  std::mt19937_64 rng(seed);
  for (const ManifestEntry& e : weights_manifest(hp)) {
    NamedTensor t;
    t.name = e.name;
    t.decay = e.decay;
    t.value = Tensor<double>(e.shape);
    if (e.name == "cls_token") {
      std::normal_distribution<double> dist(0.0, 0.02);
      for (double& v : t.value.data) v = dist(rng);
    } else if (is_layer_norm(e.name)) {
      bool gain = e.name.back() == 'g';
      std::fill(t.value.data.begin(), t.value.data.end(), gain ? 1.0 : 0.0);
    } else if (e.decay) {
      double bound = 1.0 / std::sqrt(static_cast<double>(fan_in(e)));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (double& v : t.value.data) v = dist(rng);
    }  // biases stay zero
    w.tensors.push_back(std::move(t));
  }
  return w;
}

ContactSet contact_nms(const Distogram& inter, int segment_half_length,
                       int max_contacts, double cutoff) {
  const int n = static_cast<int>(inter.rows), m = static_cast<int>(inter.cols);
  const int window = 2 * segment_half_length;
  std::vector<uint8_t> suppressed(static_cast<size_t>(n) * m, 0);
  ContactSet cs;
  while (static_cast<int>(cs.contacts.size()) < max_contacts) {
    int bi = -1, bj = -1;
    double best = cutoff;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        if (suppressed[static_cast<size_t>(i) * m + j]) continue;
        double d = inter.at(i, j);
        if (d < best) {  // strict: first (i,j) in scan order wins ties
          best = d;
          bi = i;
          bj = j;
        }
      }
    if (bi < 0) break;
    cs.contacts.push_back({bi, bj, best});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        if (std::abs(i - bi) <= window || std::abs(j - bj) <= window)
          suppressed[static_cast<size_t>(i) * m + j] = 1;
  }
  return cs;
}

template <class T>
TapeWeights<T> register_weights(Tape<T>& tape, const ModelWeights& w, bool requires_grad) {
  TapeWeights<T> tw;
  for (const NamedTensor& t : w.tensors)
    tw.ids[t.name] = tape.input(t.value.template cast<T>(), requires_grad);
  return tw;
}

namespace {

// Shared attention block body. The encoder flavor divides the k/q logits by
// the clamped residue distance; the transformer flavor applies the usual
// 1/sqrt(d_head) scaling. Both mask before the row softmax.
template <class T>
int attention_block(Tape<T>& tape, const TapeWeights<T>& w, const HyperParams& hp,
                    const std::string& prefix, int x, int invd, int mask,
                    bool distance_scaled, int width) {
  const int dh = width / hp.n_heads;
  int q = tape.linear(x, w.at(prefix + "attn.wq"), w.at(prefix + "attn.bq"));
  int k = tape.linear(x, w.at(prefix + "attn.wk"), w.at(prefix + "attn.bk"));
  int v = tape.linear(x, w.at(prefix + "attn.wv"), w.at(prefix + "attn.bv"));

  std::vector<int> head_outputs;
  for (int h = 0; h < hp.n_heads; ++h) {
    int qh = tape.slice(q, 1, h * dh, dh);
    int kh = tape.slice(k, 1, h * dh, dh);
    int vh = tape.slice(v, 1, h * dh, dh);
    int scores;
    if (distance_scaled) {
      // w_ij = softmax(<k_i, q_j> / d_ij) over the neighbor set of i
      scores = tape.mul(tape.matmul(kh, tape.transpose(qh)), invd);
    } else {
      scores = tape.scale(tape.matmul(qh, tape.transpose(kh)),
                          T(1) / std::sqrt(T(dh)));
    }
    int attn = tape.masked_softmax_rows(scores, mask);
    head_outputs.push_back(tape.matmul(attn, vh));
  }
  int merged = tape.concat(1, head_outputs);
  int out = tape.linear(merged, w.at(prefix + "attn.wo"), w.at(prefix + "attn.bo"));

  int y = tape.layer_norm_rows(tape.add(x, out), w.at(prefix + "ln1.g"),
                               w.at(prefix + "ln1.b"));
  int h1 = tape.gelu(tape.linear(y, w.at(prefix + "ffn.w1"), w.at(prefix + "ffn.b1")));
  int h2 = tape.linear(h1, w.at(prefix + "ffn.w2"), w.at(prefix + "ffn.b2"));
  return tape.layer_norm_rows(tape.add(y, h2), w.at(prefix + "ln2.g"),
                              w.at(prefix + "ln2.b"));
}

}  // namespace

template <class T>
int distance_aware_attention(Tape<T>& tape, const TapeWeights<T>& w,
                             const HyperParams& hp, const std::string& prefix,
                             int x, int invd, int mask) {
  return attention_block(tape, w, hp, prefix, x, invd, mask, true, hp.d_model);
}

template <class T>
int encode_protein(Tape<T>& tape, const TapeWeights<T>& w, const HyperParams& hp,
                   const ResidueFeatures& features, const Distogram& intra) {
  if (features.n_residues < 1)
    throw std::invalid_argument("encode_protein: empty chain");
  if (intra.rows != features.n_residues || intra.cols != features.n_residues)
    throw std::invalid_argument("encode_protein: distogram/features mismatch");

  const int n = static_cast<int>(features.n_residues);
  Tensor<T> feat({n, ResidueFeatures::kWidth});
  for (size_t i = 0; i < features.values.size(); ++i)
    feat.data[i] = static_cast<T>(features.values[i]);

  NeighborGraph graph = neighbor_graph(intra, hp.contact_cutoff);
  Tensor<T> invd({n, n}), mask({n, n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      invd.at2(i, j) = static_cast<T>(1.0 / std::max(intra.at(i, j), 1.0));
      mask.at2(i, j) = graph.connected(i, j) ? T(1) : T(0);
    }

  int invd_id = tape.constant(std::move(invd));
  int mask_id = tape.constant(std::move(mask));
  int x = tape.linear(tape.constant(std::move(feat)), w.at("input_proj.w"),
                      w.at("input_proj.b"));
  for (int l = 0; l < hp.n_enc_layers; ++l)
    x = distance_aware_attention(tape, w, hp, "enc." + std::to_string(l) + ".",
                                 x, invd_id, mask_id);
  return x;
}

template <class T>
int extract_segment(Tape<T>& tape, int embeddings, int center, int segment_half_length) {
  return tape.pad_slice_rows(embeddings, center - segment_half_length,
                             2 * segment_half_length + 1);
}

template <class T>
int build_interaction_descriptor(Tape<T>& tape, int seg_rec, int seg_lig) {
  return tape.cross_concat(seg_rec, seg_lig);
}

template <class T>
int encode_contact(Tape<T>& tape, const TapeWeights<T>& w, const HyperParams& hp,
                   int descriptor) {
  int x = tape.relu(tape.conv2d(descriptor, w.at("cnn.conv1.k"), w.at("cnn.conv1.b"),
                                ConvPadding::Same));
  if (tape.value(x).shape[0] >= 2 && tape.value(x).shape[1] >= 2) x = tape.maxpool2d(x);
  x = tape.relu(tape.conv2d(x, w.at("cnn.conv2.k"), w.at("cnn.conv2.b"),
                            ConvPadding::Same));
  if (tape.value(x).shape[0] >= 2 && tape.value(x).shape[1] >= 2) x = tape.maxpool2d(x);
  x = tape.relu(tape.conv2d(x, w.at("cnn.conv3.k"), w.at("cnn.conv3.b"),
                            ConvPadding::Same));
  int pooled = tape.global_mean_pool(x);
  return tape.linear(pooled, w.at("contact_proj.w"), w.at("contact_proj.b"));
}

template <class T>
int interaction_transformer(Tape<T>& tape, const TapeWeights<T>& w, const HyperParams& hp,
                            const std::vector<int>& contact_tokens,
                            const std::vector<bool>& valid) {
  if (contact_tokens.empty())
    throw std::invalid_argument("interaction_transformer: needs at least one token");
  if (valid.size() != contact_tokens.size())
    throw std::invalid_argument("interaction_transformer: valid flags mismatch");

  std::vector<int> rows;
  rows.push_back(w.at("cls_token"));
  for (int t : contact_tokens) rows.push_back(t);
  int x = tape.concat(0, rows);

  const int m = static_cast<int>(rows.size());
  Tensor<T> mask({m, m});
  for (int i = 0; i < m; ++i) {
    mask.at2(i, 0) = T(1);  // cls column
    for (int j = 1; j < m; ++j) mask.at2(i, j) = valid[j - 1] ? T(1) : T(0);
  }
  int mask_id = tape.constant(std::move(mask));

  for (int l = 0; l < hp.n_tx_layers; ++l)
    x = attention_block(tape, w, hp, "tx." + std::to_string(l) + ".", x, -1,
                        mask_id, false, hp.d_contact);

  int cls_out = tape.slice(x, 0, 0, 1);
  int h = tape.relu(tape.linear(cls_out, w.at("head.w1"), w.at("head.b1")));
  return tape.linear(h, w.at("head.w2"), w.at("head.b2"));
}

namespace {

template <class T>
ForwardResult<T> contact_stage(Tape<T>& tape, const TapeWeights<T>& w,
                               const HyperParams& hp, int rec_emb, int lig_emb,
                               const std::vector<Vec3>& rec_ca,
                               const std::vector<Vec3>& lig_ca) {
  ForwardResult<T> result;
  Distogram inter = distance_matrix(rec_ca, lig_ca);
  result.contacts = contact_nms(inter, hp.segment_half_length, hp.max_contacts,
                                hp.contact_cutoff);
  if (result.contacts.empty()) {
    result.no_contact = true;
    return result;
  }
  std::vector<int> tokens;
  std::vector<bool> valid;
  for (const Contact& c : result.contacts.contacts) {
    int seg_r = extract_segment(tape, rec_emb, c.rec_index, hp.segment_half_length);
    int seg_l = extract_segment(tape, lig_emb, c.lig_index, hp.segment_half_length);
    int descriptor = build_interaction_descriptor(tape, seg_r, seg_l);
    tokens.push_back(encode_contact(tape, w, hp, descriptor));
    valid.push_back(true);
  }
  result.logit_id = interaction_transformer(tape, w, hp, tokens, valid);
  return result;
}

}  // namespace

template <class T>
ForwardResult<T> forward_complex(Tape<T>& tape, const TapeWeights<T>& w,
                                 const HyperParams& hp,
                                 const ResidueFeatures& rec_features,
                                 const std::vector<Vec3>& rec_ca,
                                 const ResidueFeatures& lig_features,
                                 const std::vector<Vec3>& lig_ca) {
  int rec_emb = encode_protein(tape, w, hp, rec_features, distance_matrix(rec_ca, rec_ca));
  int lig_emb = encode_protein(tape, w, hp, lig_features, distance_matrix(lig_ca, lig_ca));
  return contact_stage(tape, w, hp, rec_emb, lig_emb, rec_ca, lig_ca);
}

template <class T>
double score_complex(const ModelWeights& weights,
                     const ResidueFeatures& rec_features, const std::vector<Vec3>& rec_ca,
                     const ResidueFeatures& lig_features, const std::vector<Vec3>& lig_ca,
                     ScoreDiagnostics* diag) {
  Tape<T> tape;
  TapeWeights<T> w = register_weights(tape, weights, false);
  ForwardResult<T> fwd = forward_complex(tape, w, weights.hp, rec_features, rec_ca,
                                         lig_features, lig_ca);
  double score = 0.0, logit = 0.0;
  if (!fwd.no_contact) {
    logit = static_cast<double>(tape.value(fwd.logit_id).data[0]);
    score = sigmoid(logit);
  }
  if (diag) {
    diag->contacts = fwd.contacts;
    diag->no_contact = fwd.no_contact;
    diag->logit = logit;
  }
  return score;
}

template <class T>
Tensor<T> encode_protein_values(const ModelWeights& weights,
                                const ResidueFeatures& features,
                                const std::vector<Vec3>& ca) {
  Tape<T> tape;
  TapeWeights<T> w = register_weights(tape, weights, false);
  int emb = encode_protein(tape, w, weights.hp, features, distance_matrix(ca, ca));
  return tape.value(emb);
}

template <class T>
double score_from_embeddings(const ModelWeights& weights, const Tensor<T>& rec_embedding,
                             const std::vector<Vec3>& rec_ca, const Tensor<T>& lig_embedding,
                             const std::vector<Vec3>& lig_ca, ScoreDiagnostics* diag) {
  Tape<T> tape;
  TapeWeights<T> w = register_weights(tape, weights, false);
  int rec_emb = tape.constant(rec_embedding);
  int lig_emb = tape.constant(lig_embedding);
  ForwardResult<T> fwd = contact_stage(tape, w, weights.hp, rec_emb, lig_emb, rec_ca, lig_ca);
  double score = 0.0, logit = 0.0;
  if (!fwd.no_contact) {
    logit = static_cast<double>(tape.value(fwd.logit_id).data[0]);
    score = sigmoid(logit);
  }
  if (diag) {
    diag->contacts = fwd.contacts;
    diag->no_contact = fwd.no_contact;
    diag->logit = logit;
  }
  return score;
}

// explicit instantiations for the two numeric modes
template TapeWeights<double> register_weights(Tape<double>&, const ModelWeights&, bool);
template TapeWeights<float> register_weights(Tape<float>&, const ModelWeights&, bool);
template int distance_aware_attention(Tape<double>&, const TapeWeights<double>&,
                                      const HyperParams&, const std::string&, int, int, int);
template int distance_aware_attention(Tape<float>&, const TapeWeights<float>&,
                                      const HyperParams&, const std::string&, int, int, int);
template int encode_protein(Tape<double>&, const TapeWeights<double>&, const HyperParams&,
                            const ResidueFeatures&, const Distogram&);
template int encode_protein(Tape<float>&, const TapeWeights<float>&, const HyperParams&,
                            const ResidueFeatures&, const Distogram&);
template int extract_segment(Tape<double>&, int, int, int);
template int extract_segment(Tape<float>&, int, int, int);
template int build_interaction_descriptor(Tape<double>&, int, int);
template int build_interaction_descriptor(Tape<float>&, int, int);
template int encode_contact(Tape<double>&, const TapeWeights<double>&, const HyperParams&, int);
template int encode_contact(Tape<float>&, const TapeWeights<float>&, const HyperParams&, int);
template int interaction_transformer(Tape<double>&, const TapeWeights<double>&,
                                     const HyperParams&, const std::vector<int>&,
                                     const std::vector<bool>&);
template int interaction_transformer(Tape<float>&, const TapeWeights<float>&,
                                     const HyperParams&, const std::vector<int>&,
                                     const std::vector<bool>&);
template ForwardResult<double> forward_complex(Tape<double>&, const TapeWeights<double>&,
                                               const HyperParams&, const ResidueFeatures&,
                                               const std::vector<Vec3>&, const ResidueFeatures&,
                                               const std::vector<Vec3>&);
template ForwardResult<float> forward_complex(Tape<float>&, const TapeWeights<float>&,
                                              const HyperParams&, const ResidueFeatures&,
                                              const std::vector<Vec3>&, const ResidueFeatures&,
                                              const std::vector<Vec3>&);
template double score_complex<double>(const ModelWeights&, const ResidueFeatures&,
                                      const std::vector<Vec3>&, const ResidueFeatures&,
                                      const std::vector<Vec3>&, ScoreDiagnostics*);
template double score_complex<float>(const ModelWeights&, const ResidueFeatures&,
                                     const std::vector<Vec3>&, const ResidueFeatures&,
                                     const std::vector<Vec3>&, ScoreDiagnostics*);
template Tensor<double> encode_protein_values<double>(const ModelWeights&,
                                                      const ResidueFeatures&,
                                                      const std::vector<Vec3>&);
template Tensor<float> encode_protein_values<float>(const ModelWeights&,
                                                    const ResidueFeatures&,
                                                    const std::vector<Vec3>&);
template double score_from_embeddings<double>(const ModelWeights&, const Tensor<double>&,
                                              const std::vector<Vec3>&, const Tensor<double>&,
                                              const std::vector<Vec3>&, ScoreDiagnostics*);
template double score_from_embeddings<float>(const ModelWeights&, const Tensor<float>&,
                                             const std::vector<Vec3>&, const Tensor<float>&,
                                             const std::vector<Vec3>&, ScoreDiagnostics*);

}  // namespace contactnet
