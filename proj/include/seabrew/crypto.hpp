#pragma once
// Symmetric and signature plumbing: hashes, a labeled KDF, AES-256-GCM,
// 40-byte Schnorr signatures over the bilinear group's base subgroup, and an
// integrated-encryption sealed box for delivering key material to a single
// recipient.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "seabrew/algebra.hpp"
#include "seabrew/bytes.hpp"

namespace seabrew::crypto {

// ----------------------------------------------------------------------------
// hashes and KDF

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data);
std::array<std::uint8_t, 64> sha512(std::span<const std::uint8_t> data);

// Labeled KDF: block_i = SHA-256(label || 0x00 || BE32(i) || input),
// concatenated and truncated to out_len. Distinct labels give independent
// outputs for the same input.
Bytes kdf(std::string_view label, std::span<const std::uint8_t> input,
          std::size_t out_len);

// ----------------------------------------------------------------------------
// authenticated encryption (AES-256-GCM)

inline constexpr std::size_t kAeadKeyBytes = 32;
inline constexpr std::size_t kAeadNonceBytes = 12;
inline constexpr std::size_t kAeadTagBytes = 16;

// Returns ciphertext || 16-byte tag.
Bytes aead_seal(std::span<const std::uint8_t> key,
                std::span<const std::uint8_t> nonce,
                std::span<const std::uint8_t> aad,
                std::span<const std::uint8_t> plaintext);
// Rejects on any mismatch of key, nonce, aad, ciphertext, or tag.
std::optional<Bytes> aead_open(std::span<const std::uint8_t> key,
                               std::span<const std::uint8_t> nonce,
                               std::span<const std::uint8_t> aad,
                               std::span<const std::uint8_t> sealed);

// ----------------------------------------------------------------------------
// Schnorr signatures (group order r, 160-bit scalars): 20-byte challenge plus
// 20-byte response = 40 bytes total.

inline constexpr std::size_t kSignatureBytes = 40;

struct SigningKey {
  algebra::Scalar secret;
  algebra::G0 public_key;
};

// The same scalar/point pair shape serves sealed-box reception; the alias
// marks intent where a pair is held only for receiving sealed messages.
using BoxKeyPair = SigningKey;

SigningKey sig_keygen(algebra::Rng& rng);
// Deterministic (nonce derived from secret and message).
std::array<std::uint8_t, kSignatureBytes> sign(const SigningKey& key,
                                               std::span<const std::uint8_t> msg);
bool verify(const algebra::G0& public_key, std::span<const std::uint8_t> msg,
            std::span<const std::uint8_t> signature);

// ----------------------------------------------------------------------------
// sealed box: one-shot encryption to a public key (ephemeral Diffie-Hellman
// over the base subgroup + AEAD). Output = 64-byte ephemeral point ||
// ciphertext || 16-byte tag; overhead is exactly 80 bytes.

inline constexpr std::size_t kSealOverheadBytes = algebra::kG0Bytes + kAeadTagBytes;

Bytes seal_to(const algebra::G0& recipient, std::span<const std::uint8_t> plaintext,
              algebra::Rng& rng);
std::optional<Bytes> open_sealed(const algebra::Scalar& recipient_secret,
                                 std::span<const std::uint8_t> sealed);

}  // namespace seabrew::crypto
