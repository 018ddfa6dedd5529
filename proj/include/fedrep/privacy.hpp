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

#pragma once

// Update sanitisation (L2 clipping + Gaussian noise) and the encode/decode
// channel wrapped around every exchanged parameter vector.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "fedrep/lstm_model.hpp"

namespace fedrep::privacy {

using lstm::ParamVector;

struct DpConfig {
  bool enabled = false;
  double epsilon = 1.0;
  double delta = 1e-5;
  double clip_norm = 1.0;

  // Throws when epsilon <= 0, delta outside (0, 1) or clip_norm <= 0.
  void validate() const;
  bool operator==(const DpConfig&) const = default;
};

double l2_norm(std::span<const double> v);

// v * min(1, C / ||v||_2).
ParamVector clip_update(const ParamVector& v, double clip_norm);

// Classical Gaussian-mechanism calibration
//   sigma = C * sqrt(2 ln(1.25 / delta)) / epsilon,
// valid only for epsilon <= 1; larger epsilon is rejected.
double gaussian_sigma(const DpConfig& cfg);

// clip(v, C) + N(0, sigma^2 I), deterministic in rng_seed. Returns v
// untouched when cfg.enabled is false.
ParamVector perturb(const ParamVector& v, const DpConfig& cfg, std::uint64_t rng_seed);

// Budget spent by `rounds` releases under simple composition.
struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;
};
PrivacyBudget composed_budget(const DpConfig& cfg, std::size_t rounds);

inline constexpr std::size_t kKeyBytes = 32;
using Key = std::array<std::uint8_t, kKeyBytes>;

// identity: the plain checkpoint serialisation.
// symmetric: XChaCha20-Poly1305 over that serialisation, laid out as
//            24-byte nonce || ciphertext || 16-byte tag.
struct Codec {
  enum class Scheme { kIdentity, kSymmetric };
  Scheme scheme = Scheme::kIdentity;
  Key key{};

  static Codec identity() { return {}; }
  static Codec symmetric(const Key& key) { return {Scheme::kSymmetric, key}; }
  bool operator==(const Codec&) const = default;
};

std::vector<std::uint8_t> encode(const ParamVector& v, const Codec& codec);
// Throws AuthenticationError on a wrong key or modified bytes.
ParamVector decode(std::span<const std::uint8_t> bytes, const Codec& codec);

}  // namespace fedrep::privacy
