#include <cstring>
#include <fstream>

#include "contactnet/network.hpp"
#include "json.hpp"

namespace contactnet {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'C', 'N', 'W', 'T'};
constexpr uint16_t kVersion = 1;

json hyperparams_to_json(const HyperParams& hp) {
  return json{{"d_model", hp.d_model},
              {"n_enc_layers", hp.n_enc_layers},
              {"n_heads", hp.n_heads},
              {"segment_half_length", hp.segment_half_length},
              {"max_contacts", hp.max_contacts},
              {"contact_cutoff", hp.contact_cutoff},
              {"d_contact", hp.d_contact},
              {"n_tx_layers", hp.n_tx_layers},
              {"ffn_mult", hp.ffn_mult},
              {"d_in", hp.d_in},
              {"conv1_channels", hp.conv1_channels},
              {"conv2_channels", hp.conv2_channels},
              {"conv3_channels", hp.conv3_channels},
              {"head_hidden", hp.head_hidden}};
}

HyperParams hyperparams_from_json(const json& j) {
  HyperParams hp;
  hp.d_model = j.at("d_model");
  hp.n_enc_layers = j.at("n_enc_layers");
  hp.n_heads = j.at("n_heads");
  hp.segment_half_length = j.at("segment_half_length");
  hp.max_contacts = j.at("max_contacts");
  hp.contact_cutoff = j.at("contact_cutoff");
  hp.d_contact = j.at("d_contact");
  hp.n_tx_layers = j.at("n_tx_layers");
  hp.ffn_mult = j.at("ffn_mult");
  hp.d_in = j.at("d_in");
  hp.conv1_channels = j.at("conv1_channels");
  hp.conv2_channels = j.at("conv2_channels");
  hp.conv3_channels = j.at("conv3_channels");
  hp.head_hidden = j.at("head_hidden");
  return hp;
}

void put_u16le(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32le(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace

void save_weights(const ModelWeights& weights, const std::string& path) {
  json manifest;
  manifest["hyperparams"] = hyperparams_to_json(weights.hp);
  json tensors = json::array();
  uint64_t offset = 0;
  for (const NamedTensor& t : weights.tensors) {
    tensors.push_back({{"name", t.name}, {"shape", t.value.shape}, {"offset", offset}});
    offset += static_cast<uint64_t>(t.value.size()) * sizeof(float);
  }
  manifest["tensors"] = tensors;
  std::string mtext = manifest.dump();

  std::string header;
  header.append(kMagic, 4);
  put_u16le(header, kVersion);
  put_u32le(header, static_cast<uint32_t>(mtext.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write weights file: " + path);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
  for (const NamedTensor& t : weights.tensors) {
    for (double v : t.value.data) {
      float f = static_cast<float>(v);
      char buf[4];
      std::memcpy(buf, &f, 4);  // IEEE-754 LE on all supported targets
      out.write(buf, 4);
    }
  }
  if (!out) throw std::runtime_error("write failure on weights file: " + path);
}

ModelWeights load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open weights file: " + path);
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (blob.size() < 10 || std::memcmp(blob.data(), kMagic, 4) != 0)
    throw WeightsIoError(WeightsIoErrorKind::Magic, "not a CNWT weights file: " + path);
  uint16_t version = static_cast<uint8_t>(blob[4]) |
                     (static_cast<uint16_t>(static_cast<uint8_t>(blob[5])) << 8);
  if (version != kVersion)
    throw WeightsIoError(WeightsIoErrorKind::Version,
                         "unsupported weights format version " + std::to_string(version));
  uint32_t mlen = 0;
  for (int i = 0; i < 4; ++i)
    mlen |= static_cast<uint32_t>(static_cast<uint8_t>(blob[6 + i])) << (8 * i);
  if (blob.size() < 10 + static_cast<size_t>(mlen))
    throw WeightsIoError(WeightsIoErrorKind::Truncated, "truncated weights manifest");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(blob.substr(10, mlen));
  } catch (const std::exception& e) {
    throw WeightsIoError(WeightsIoErrorKind::Manifest,
                         std::string("bad weights manifest: ") + e.what());
  }

  ModelWeights w;
  w.hp = hyperparams_from_json(manifest.at("hyperparams"));
  auto expected = weights_manifest(w.hp);
  const auto& tensors = manifest.at("tensors");
  if (tensors.size() != expected.size())
    throw WeightsIoError(WeightsIoErrorKind::Manifest,
                         "weights manifest tensor count mismatch");

  const size_t payload_base = 10 + mlen;
  for (size_t i = 0; i < expected.size(); ++i) {
    const auto& rec = tensors.at(i);
    std::string name = rec.at("name");
    std::vector<int> shape = rec.at("shape").get<std::vector<int>>();
    if (name != expected[i].name || shape != expected[i].shape)
      throw WeightsIoError(WeightsIoErrorKind::ShapeMismatch,
                           "tensor " + name + " does not match manifest entry " +
                               expected[i].name);
    uint64_t offset = rec.at("offset");
    int64_t count = Tensor<double>::numel(shape);
    size_t begin = payload_base + offset;
    size_t bytes = static_cast<size_t>(count) * sizeof(float);
    if (begin + bytes > blob.size())
      throw WeightsIoError(WeightsIoErrorKind::Truncated,
                           "truncated payload for tensor " + name);
    NamedTensor t;
    t.name = name;
    t.decay = expected[i].decay;
    t.value = Tensor<double>(shape);
    for (int64_t k = 0; k < count; ++k) {
      float f;
      std::memcpy(&f, blob.data() + begin + static_cast<size_t>(k) * 4, 4);
      t.value.data[k] = static_cast<double>(f);
    }
    w.tensors.push_back(std::move(t));
  }
  return w;
}

ModelWeights load_weights(const std::string& path, const HyperParams& expected) {
  ModelWeights w = load_weights(path);
  if (!(w.hp == expected)) {
    auto want = weights_manifest(expected);
    auto have = weights_manifest(w.hp);
    for (size_t i = 0; i < std::min(want.size(), have.size()); ++i) {
      if (want[i].shape != have[i].shape)
        throw WeightsIoError(WeightsIoErrorKind::ShapeMismatch,
                             "tensor " + want[i].name + " shape mismatch against config");
    }
    throw WeightsIoError(WeightsIoErrorKind::ShapeMismatch,
                         "weights hyperparameters do not match config");
  }
  return w;
}

}  // namespace contactnet
