// Copyright 2026 The FedREP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fedrep/privacy.hpp"

#include <cmath>
#include <random>

#include <sodium.h>

#include "fedrep/error.hpp"

namespace fedrep::privacy {

namespace {

void ensure_sodium() {
  static const int status = sodium_init();
  if (status < 0) throw Error("libsodium initialisation failed");
}

constexpr std::size_t kNonceBytes = crypto_aead_xchacha20poly1305_ietf_NPUBBYTES;
constexpr std::size_t kTagBytes = crypto_aead_xchacha20poly1305_ietf_ABYTES;

}  // namespace

void DpConfig::validate() const {
  if (!(epsilon > 0.0)) throw Error("dp.epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw Error("dp.delta must lie in (0, 1)");
  if (!(clip_norm > 0.0)) throw Error("dp.clip_norm must be positive");
}

double l2_norm(std::span<const double> v) {
  // Scaled accumulation avoids overflow for huge entries.
  double scale = 0.0;
  double ssq = 1.0;
  for (double x : v) {
    if (x == 0.0) continue;
    const double a = std::fabs(x);
    if (scale < a) {
      ssq = 1.0 + ssq * (scale / a) * (scale / a);
      scale = a;
    } else {
      ssq += (a / scale) * (a / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

ParamVector clip_update(const ParamVector& v, double clip_norm) {
  if (!(clip_norm > 0.0)) throw Error("clip norm must be positive");
  const double norm = l2_norm(v.values);
  if (norm <= clip_norm) return v;
  ParamVector out = v;
  const double factor = clip_norm / norm;
  for (auto& x : out.values) x *= factor;
  // Rounding can leave the product a hair above C.
  while (l2_norm(out.values) > clip_norm) {
    for (auto& x : out.values) x = std::nextafter(x, 0.0);
  }
  return out;
}

double gaussian_sigma(const DpConfig& cfg) {
  cfg.validate();
  if (cfg.epsilon > 1.0) {
    throw Error("dp.epsilon > 1 is outside the Gaussian-mechanism calibration range (0, 1]");
  }
  return cfg.clip_norm * std::sqrt(2.0 * std::log(1.25 / cfg.delta)) / cfg.epsilon;
}

ParamVector perturb(const ParamVector& v, const DpConfig& cfg, std::uint64_t rng_seed) {
  if (!cfg.enabled) return v;
  const double sigma = gaussian_sigma(cfg);
  ParamVector out = clip_update(v, cfg.clip_norm);
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& x : out.values) x += noise(rng);
  return out;
}

PrivacyBudget composed_budget(const DpConfig& cfg, std::size_t rounds) {
  if (!cfg.enabled) return {};
  const auto k = static_cast<double>(rounds);
  return {k * cfg.epsilon, k * cfg.delta};
}

std::vector<std::uint8_t> encode(const ParamVector& v, const Codec& codec) {
  auto plain = lstm::serialize(v);
  if (codec.scheme == Codec::Scheme::kIdentity) return plain;

  ensure_sodium();
  std::vector<std::uint8_t> out(kNonceBytes + plain.size() + kTagBytes);
  randombytes_buf(out.data(), kNonceBytes);
  unsigned long long written = 0;
  crypto_aead_xchacha20poly1305_ietf_encrypt(out.data() + kNonceBytes, &written, plain.data(),
                                             plain.size(), nullptr, 0, nullptr, out.data(),
                                             codec.key.data());
  out.resize(kNonceBytes + written);
  return out;
}

ParamVector decode(std::span<const std::uint8_t> bytes, const Codec& codec) {
  if (codec.scheme == Codec::Scheme::kIdentity) return lstm::deserialize(bytes);

  ensure_sodium();
  if (bytes.size() < kNonceBytes + kTagBytes) {
    throw AuthenticationError("encrypted update is truncated");
  }
  std::vector<std::uint8_t> plain(bytes.size() - kNonceBytes - kTagBytes);
  unsigned long long written = 0;
  if (crypto_aead_xchacha20poly1305_ietf_decrypt(plain.data(), &written, nullptr,
                                                 bytes.data() + kNonceBytes,
                                                 bytes.size() - kNonceBytes, nullptr, 0,
                                                 bytes.data(), codec.key.data()) != 0) {
    throw AuthenticationError("encrypted update failed authentication (wrong key or corrupted)");
  }
  plain.resize(written);
  return lstm::deserialize(plain);
}

}  // namespace fedrep::privacy
