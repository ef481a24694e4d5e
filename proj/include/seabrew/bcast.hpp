#pragma once
// Constant-size broadcast encryption (Boneh–Gentry–Waters, general variant).
// The gateway runs setup once for a fixed receiver capacity n, hands each
// receiver one private element, and can later wrap a 20-byte payload so that
// exactly the receivers in a chosen subset S recover it. The header size does
// not depend on |S|: two group elements plus the padded payload, with the
// receiver bitmap traveling alongside in the clear.
//
// The KEM session key is a pairing value; a fixed-tag KDF compresses it to a
// 20-byte one-time pad for the payload. Integrity is deliberately out of
// scope here — transport signatures cover it.

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "seabrew/algebra.hpp"
#include "seabrew/bytes.hpp"
#include "seabrew/result.hpp"

namespace seabrew::bcast {

inline constexpr std::size_t kPayloadBytes = algebra::kScalarBytes;  // 20
// Accounted wire overhead beyond the payload: the two header elements. The
// version byte and receiver bitmap are carried but conventionally excluded
// from size accounting (the gateway and every receiver already know the set).
inline constexpr std::size_t kHeaderElementBytes = 2 * algebra::kG0Bytes;  // 128

// Subset of receiver indices {1..n} as a little-endian bitmap (index i lives
// at bit (i-1) % 8 of byte (i-1) / 8). Spare bits above n stay zero.
struct ReceiverSet {
  std::uint32_t n = 0;
  std::vector<std::uint8_t> bits;

  static ReceiverSet none(std::uint32_t n);
  static ReceiverSet all(std::uint32_t n);
  static Result<ReceiverSet> of(std::uint32_t n,
                                std::span<const std::uint32_t> indices);

  void insert(std::uint32_t i);
  void erase(std::uint32_t i);
  bool contains(std::uint32_t i) const;
  bool empty() const;
  std::size_t count() const;
  std::vector<std::uint32_t> indices() const;  // ascending

  bool operator==(const ReceiverSet&) const = default;
};

struct BroadcastPublicKey {
  std::uint32_t n = 0;
  // powers[k] = g^{alpha^k} for k in 0..2n except n+1 (that slot stays the
  // identity and is never used; publishing it would break security).
  std::vector<algebra::G0> powers;
  algebra::G0 v;  // g^gamma
  bool operator==(const BroadcastPublicKey&) const = default;
};

struct BroadcastPrivateKey {
  std::uint32_t index = 0;  // receiver index in {1..n}
  algebra::G0 d;            // g^{gamma * alpha^index}
  bool operator==(const BroadcastPrivateKey&) const = default;
};

struct BroadcastHeader {
  ReceiverSet set;  // travels in the clear
  algebra::G0 c0;   // g^t
  algebra::G0 c1;   // (v * prod_{j in S} g_{n+1-j})^t
  std::array<std::uint8_t, kPayloadBytes> wrapped{};  // payload XOR pad
  bool operator==(const BroadcastHeader&) const = default;
};

// One-time system setup for capacity n >= 1: the public key plus one private
// key per receiver index 1..n.
std::pair<BroadcastPublicKey, std::vector<BroadcastPrivateKey>> bc_setup(
    std::uint32_t n, algebra::Rng& rng);

// Wrap `payload` (exactly kPayloadBytes) for the receivers in `set`. The set
// must be nonempty and sized for the same n as the public key.
Result<BroadcastHeader> bc_encrypt(const BroadcastPublicKey& bpk,
                                   const ReceiverSet& set,
                                   std::span<const std::uint8_t> payload,
                                   algebra::Rng& rng);

// Recover the payload; fails with not_authorized when the key's index is
// outside the header's receiver set. A tampered header yields garbage rather
// than an error — callers authenticate headers before trusting the result.
Result<std::array<std::uint8_t, kPayloadBytes>> bc_decrypt(
    const BroadcastPublicKey& bpk, const BroadcastPrivateKey& key,
    const BroadcastHeader& header);

// Header wire format (the only part of this module that crosses the network):
// 1-byte format tag, ceil(n/8)-byte bitmap, c0, c1, wrapped payload.
Bytes serialize_header(const BroadcastHeader& header);
Result<BroadcastHeader> deserialize_header(std::uint32_t n, ByteReader& r);
std::size_t serialized_header_size(std::uint32_t n);

// Key storage encodings (local files only; these never cross the network).
void serialize(const BroadcastPublicKey&, ByteWriter&);
void serialize(const BroadcastPrivateKey&, ByteWriter&);
Result<BroadcastPublicKey> deserialize_broadcast_public_key(ByteReader&);
Result<BroadcastPrivateKey> deserialize_broadcast_private_key(ByteReader&);

}  // namespace seabrew::bcast
