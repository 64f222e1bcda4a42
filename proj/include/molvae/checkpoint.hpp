//
// molvae - Copyright 2026 the molvae authors
// SPDX-License-Identifier: Apache-2.0
//
#ifndef MOLVAE_CHECKPOINT_HPP
#define MOLVAE_CHECKPOINT_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "molvae/model.hpp"

namespace molvae {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Checkpoint layout (version 1):
//   bytes 0..7   magic "MVAECKPT"
//   u32 LE       format version
//   u64 LE       JSON header length
//   ...          JSON header (vocabulary, stats, prior, spec, param table,
//                training-set SMILES)
//   ...          per parameter, in header order: flat f64 little-endian array
namespace detail {

inline constexpr char kMagic[8] = {'M', 'V', 'A', 'E', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kVersion = 1;

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double d) {
  put_u64(out, std::bit_cast<std::uint64_t>(d));
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw CheckpointError("truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    }
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    }
    pos += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
};

}  // namespace detail

inline void save_checkpoint(const std::string& path, const SsvaeModel& model) {
  nlohmann::json header;
  header["format"] = "molvae-checkpoint";
  header["vocabulary"] = model.vocab.symbols();
  header["properties"] = model.stats.names;
  header["normalization"] = {{"mean", model.stats.mean}, {"std", model.stats.stddev}};
  std::vector<std::vector<double>> cov(model.prior.dim(),
                                       std::vector<double>(model.prior.dim()));
  for (int i = 0; i < model.prior.dim(); ++i) {
    for (int j = 0; j < model.prior.dim(); ++j) cov[i][j] = model.prior.cov().at(i, j);
  }
  header["prior"] = {{"mean", model.prior.mean()}, {"cov", cov}};
  header["spec"] = {{"vocab", model.spec.vocab},   {"m", model.spec.m},
                    {"z_dim", model.spec.z_dim},   {"hidden", model.spec.hidden},
                    {"layers", model.spec.layers}, {"max_len", model.spec.max_len}};
  nlohmann::json params = nlohmann::json::array();
  for (int p = 0; p < model.params.count(); ++p) {
    params.push_back({{"name", model.params.name(p)},
                      {"shape", model.params.value(p).shape}});
  }
  header["params"] = params;
  header["training_set"] = model.training_set;

  const std::string header_text = header.dump();
  std::string out;
  out.append(detail::kMagic, 8);
  detail::put_u32(out, detail::kVersion);
  detail::put_u64(out, header_text.size());
  out += header_text;
  for (int p = 0; p < model.params.count(); ++p) {
    for (double v : model.params.value(p).data) detail::put_f64(out, v);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot write checkpoint " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

inline SsvaeModel load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < 20 || std::memcmp(buf.data(), detail::kMagic, 8) != 0) {
    throw CheckpointError(path + " is not a molvae checkpoint");
  }
  detail::Reader r{buf, 8};
  const std::uint32_t version = r.u32();
  if (version != detail::kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint64_t header_len = r.u64();
  r.need(header_len);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(buf.substr(r.pos, header_len));
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("bad checkpoint header: ") + e.what());
  }
  r.pos += header_len;

  SsvaeModel model;
  model.vocab = Vocabulary(header.at("vocabulary").get<std::vector<std::string>>());
  model.stats.names = header.at("properties").get<std::vector<std::string>>();
  model.stats.mean = header.at("normalization").at("mean").get<std::vector<double>>();
  model.stats.stddev = header.at("normalization").at("std").get<std::vector<double>>();
  const auto prior_mean = header.at("prior").at("mean").get<std::vector<double>>();
  const auto prior_cov = header.at("prior").at("cov")
                             .get<std::vector<std::vector<double>>>();
  Mat cov(static_cast<int>(prior_mean.size()));
  for (int i = 0; i < cov.n; ++i) {
    for (int j = 0; j < cov.n; ++j) cov.at(i, j) = prior_cov[i][j];
  }
  model.prior = GaussianPrior(prior_mean, cov);
  const auto& spec = header.at("spec");
  model.spec.vocab = spec.at("vocab").get<int>();
  model.spec.m = spec.at("m").get<int>();
  model.spec.z_dim = spec.at("z_dim").get<int>();
  model.spec.hidden = spec.at("hidden").get<int>();
  model.spec.layers = spec.at("layers").get<int>();
  model.spec.max_len = spec.at("max_len").get<int>();
  model.training_set = header.at("training_set").get<std::vector<std::string>>();

  for (const auto& p : header.at("params")) {
    const auto name = p.at("name").get<std::string>();
    const auto shape = p.at("shape").get<std::vector<int>>();
    const auto n = ad::Tensor::numel(shape);
    std::vector<double> data(static_cast<std::size_t>(n));
    for (auto& v : data) v = r.f64();
    model.params.add(name, ad::Tensor(shape, std::move(data)));
  }
  return model;
}

}  // namespace molvae

#endif  // MOLVAE_CHECKPOINT_HPP
