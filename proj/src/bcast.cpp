#include "seabrew/bcast.hpp"

#include <algorithm>
#include <bit>
#include <cassert>

#include "seabrew/crypto.hpp"

namespace seabrew::bcast {
namespace {

using algebra::G0;
using algebra::G1;
using algebra::Scalar;

constexpr std::uint8_t kHeaderFormatTag = 0x01;
constexpr std::uint16_t kTagBroadcastPublicKey = 0x0201;
constexpr std::uint16_t kTagBroadcastPrivateKey = 0x0202;
constexpr std::string_view kPadTag = "SEABREW-BCAST-KDF-v1";
constexpr std::uint32_t kMaxCapacity = 1u << 16;

std::size_t bitmap_bytes(std::uint32_t n) { return (n + 7) / 8; }

// Pad = KDF(tag, session key bytes): the KEM key is a pairing value, so it is
// hashed down to exactly the payload width before use as a one-time pad.
std::array<std::uint8_t, kPayloadBytes> pad_from_session_key(const G1& k) {
  const auto bytes = algebra::g1_to_bytes(k);
  const Bytes pad = crypto::kdf(kPadTag, bytes, kPayloadBytes);
  std::array<std::uint8_t, kPayloadBytes> out{};
  std::copy(pad.begin(), pad.end(), out.begin());
  return out;
}

Error decode_err(const char* what) { return Error{Errc::decode_error, what}; }

bool read_g0(ByteReader& r, G0& out) {
  auto b = r.raw(algebra::kG0Bytes);
  if (!r.ok()) return false;
  auto p = algebra::g0_from_bytes(b);
  if (!p) return false;
  out = *p;
  return true;
}

}  // namespace

// ----------------------------------------------------------------------------
// receiver sets

ReceiverSet ReceiverSet::none(std::uint32_t n) {
  ReceiverSet s;
  s.n = n;
  s.bits.assign(bitmap_bytes(n), 0);
  return s;
}

ReceiverSet ReceiverSet::all(std::uint32_t n) {
  ReceiverSet s = none(n);
  for (std::uint32_t i = 1; i <= n; ++i) s.insert(i);
  return s;
}

Result<ReceiverSet> ReceiverSet::of(std::uint32_t n,
                                    std::span<const std::uint32_t> indices) {
  ReceiverSet s = none(n);
  for (std::uint32_t i : indices) {
    if (i < 1 || i > n)
      return Error{Errc::argument_error,
                   "receiver index " + std::to_string(i) + " outside 1.." +
                       std::to_string(n)};
    s.insert(i);
  }
  return s;
}

void ReceiverSet::insert(std::uint32_t i) {
  assert(i >= 1 && i <= n);
  bits[(i - 1) / 8] |= std::uint8_t(1u << ((i - 1) % 8));
}

void ReceiverSet::erase(std::uint32_t i) {
  assert(i >= 1 && i <= n);
  bits[(i - 1) / 8] &= std::uint8_t(~(1u << ((i - 1) % 8)));
}

bool ReceiverSet::contains(std::uint32_t i) const {
  if (i < 1 || i > n) return false;
  return (bits[(i - 1) / 8] >> ((i - 1) % 8)) & 1u;
}

bool ReceiverSet::empty() const { return count() == 0; }

std::size_t ReceiverSet::count() const {
  std::size_t total = 0;
  for (std::uint8_t b : bits) total += std::popcount(b);
  return total;
}

std::vector<std::uint32_t> ReceiverSet::indices() const {
  std::vector<std::uint32_t> out;
  out.reserve(count());
  for (std::uint32_t i = 1; i <= n; ++i)
    if (contains(i)) out.push_back(i);
  return out;
}

// ----------------------------------------------------------------------------
// scheme operations

std::pair<BroadcastPublicKey, std::vector<BroadcastPrivateKey>> bc_setup(
    std::uint32_t n, algebra::Rng& rng) {
  assert(n >= 1 && n <= kMaxCapacity);
  const Scalar alpha = Scalar::random_nonzero(rng);
  const Scalar gamma = Scalar::random_nonzero(rng);

  BroadcastPublicKey bpk;
  bpk.n = n;
  bpk.powers.assign(2 * std::size_t(n) + 1, algebra::g0_identity());
  bpk.powers[0] = algebra::g0_generator();
  Scalar alpha_k = Scalar::from_u64(1);
  for (std::uint32_t k = 1; k <= 2 * n; ++k) {
    alpha_k = alpha_k * alpha;
    if (k == n + 1) continue;  // never computed, never published
    bpk.powers[k] = algebra::g0_exp(algebra::g0_generator(), alpha_k);
  }
  bpk.v = algebra::g0_exp(algebra::g0_generator(), gamma);

  std::vector<BroadcastPrivateKey> keys;
  keys.reserve(n);
  for (std::uint32_t i = 1; i <= n; ++i)
    keys.push_back({i, algebra::g0_exp(bpk.powers[i], gamma)});
  return {std::move(bpk), std::move(keys)};
}

Result<BroadcastHeader> bc_encrypt(const BroadcastPublicKey& bpk,
                                   const ReceiverSet& set,
                                   std::span<const std::uint8_t> payload,
                                   algebra::Rng& rng) {
  if (set.n != bpk.n)
    return Error{Errc::argument_error, "receiver set sized for a different capacity"};
  if (set.empty())
    return Error{Errc::argument_error, "receiver set must not be empty"};
  if (payload.size() != kPayloadBytes)
    return Error{Errc::argument_error, "payload must be exactly 20 bytes"};

  const Scalar t = Scalar::random(rng);
  BroadcastHeader header;
  header.set = set;
  header.c0 = algebra::g0_exp(algebra::g0_generator(), t);
  G0 base = bpk.v;
  for (std::uint32_t j : set.indices())
    base = algebra::g0_mul(base, bpk.powers[bpk.n + 1 - j]);
  header.c1 = algebra::g0_exp(base, t);

  // Session key K = e(g_{n+1}, g)^t, computed from the published powers.
  const G1 session = algebra::g1_exp(
      algebra::pairing(bpk.powers[bpk.n], bpk.powers[1]), t);
  const auto pad = pad_from_session_key(session);
  for (std::size_t b = 0; b < kPayloadBytes; ++b)
    header.wrapped[b] = std::uint8_t(payload[b] ^ pad[b]);
  return header;
}

Result<std::array<std::uint8_t, kPayloadBytes>> bc_decrypt(
    const BroadcastPublicKey& bpk, const BroadcastPrivateKey& key,
    const BroadcastHeader& header) {
  if (header.set.n != bpk.n)
    return Error{Errc::argument_error, "header sized for a different capacity"};
  if (key.index < 1 || key.index > bpk.n)
    return Error{Errc::argument_error, "private key index out of range"};
  if (!header.set.contains(key.index))
    return Error{Errc::not_authorized, "receiver is outside the broadcast set"};

  // K = e(g_i, C1) / e(d_i * prod_{j in S, j != i} g_{n+1-j+i}, C0).
  G0 aggregate = key.d;
  for (std::uint32_t j : header.set.indices()) {
    if (j == key.index) continue;
    aggregate = algebra::g0_mul(aggregate, bpk.powers[bpk.n + 1 - j + key.index]);
  }
  const G1 session = algebra::g1_mul(
      algebra::pairing(bpk.powers[key.index], header.c1),
      algebra::g1_inverse(algebra::pairing(aggregate, header.c0)));
  const auto pad = pad_from_session_key(session);
  std::array<std::uint8_t, kPayloadBytes> out{};
  for (std::size_t b = 0; b < kPayloadBytes; ++b)
    out[b] = std::uint8_t(header.wrapped[b] ^ pad[b]);
  return out;
}

// ----------------------------------------------------------------------------
// wire format

std::size_t serialized_header_size(std::uint32_t n) {
  return 1 + bitmap_bytes(n) + kHeaderElementBytes + kPayloadBytes;
}

Bytes serialize_header(const BroadcastHeader& header) {
  ByteWriter w;
  w.u8(kHeaderFormatTag);
  w.raw(header.set.bits);
  w.raw(algebra::g0_to_bytes(header.c0));
  w.raw(algebra::g0_to_bytes(header.c1));
  w.raw(header.wrapped);
  return w.take();
}

Result<BroadcastHeader> deserialize_header(std::uint32_t n, ByteReader& r) {
  if (r.u8() != kHeaderFormatTag || !r.ok())
    return decode_err("unknown header format");
  BroadcastHeader header;
  header.set.n = n;
  auto bits = r.raw(bitmap_bytes(n));
  if (!r.ok()) return decode_err("truncated receiver bitmap");
  header.set.bits.assign(bits.begin(), bits.end());
  if (n % 8 != 0 && (header.set.bits.back() >> (n % 8)) != 0)
    return decode_err("receiver bitmap has spare bits set");
  if (!read_g0(r, header.c0) || !read_g0(r, header.c1))
    return decode_err("bad header element");
  auto wrapped = r.raw(kPayloadBytes);
  if (!r.ok()) return decode_err("truncated payload");
  std::copy(wrapped.begin(), wrapped.end(), header.wrapped.begin());
  return header;
}

void serialize(const BroadcastPublicKey& bpk, ByteWriter& w) {
  w.u16(kTagBroadcastPublicKey);
  w.u32(bpk.n);
  for (std::uint32_t k = 0; k <= 2 * bpk.n; ++k) {
    if (k == bpk.n + 1) continue;
    w.raw(algebra::g0_to_bytes(bpk.powers[k]));
  }
  w.raw(algebra::g0_to_bytes(bpk.v));
}

void serialize(const BroadcastPrivateKey& key, ByteWriter& w) {
  w.u16(kTagBroadcastPrivateKey);
  w.u32(key.index);
  w.raw(algebra::g0_to_bytes(key.d));
}

Result<BroadcastPublicKey> deserialize_broadcast_public_key(ByteReader& r) {
  if (r.u16() != kTagBroadcastPublicKey || !r.ok())
    return decode_err("wrong type tag");
  BroadcastPublicKey bpk;
  bpk.n = r.u32();
  if (!r.ok()) return decode_err("truncated capacity");
  if (bpk.n < 1 || bpk.n > kMaxCapacity) return decode_err("capacity out of range");
  bpk.powers.assign(2 * std::size_t(bpk.n) + 1, algebra::g0_identity());
  for (std::uint32_t k = 0; k <= 2 * bpk.n; ++k) {
    if (k == bpk.n + 1) continue;
    if (!read_g0(r, bpk.powers[k])) return decode_err("bad public element");
  }
  if (!read_g0(r, bpk.v)) return decode_err("bad public element");
  return bpk;
}

Result<BroadcastPrivateKey> deserialize_broadcast_private_key(ByteReader& r) {
  if (r.u16() != kTagBroadcastPrivateKey || !r.ok())
    return decode_err("wrong type tag");
  BroadcastPrivateKey key;
  key.index = r.u32();
  if (!r.ok()) return decode_err("truncated index");
  if (key.index < 1) return decode_err("index out of range");
  if (!read_g0(r, key.d)) return decode_err("bad private element");
  return key;
}

}  // namespace seabrew::bcast
