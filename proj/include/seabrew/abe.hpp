#pragma once
// Ciphertext-policy attribute-based encryption with whole-system key
// versioning. Messages are pairing-group values (see hybrid.hpp for byte
// payloads). Every key and ciphertext carries a version counter; bumping the
// master key yields a compact update record whose two scalar halves are
// mutual inverses — one lifts ciphertexts forward, the other lifts decryption
// keys — so both updates cost a single exponentiation no matter how many
// epochs they span (the scalars multiply together first).
//
// All types are immutable values; operations are pure given an RNG. The
// global exponentiation meter observes every operation (see algebra.hpp);
// encrypt splits its counts across the scope labels "encrypt.leaf-shares"
// (per-leaf work, 2 per leaf), "encrypt.version-binding" (the single h^s
// component), and "encrypt.blinding" (the single pairing-value
// exponentiation), so cost buckets can be read independently.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seabrew/algebra.hpp"
#include "seabrew/bytes.hpp"
#include "seabrew/policy.hpp"
#include "seabrew/result.hpp"

namespace seabrew::abe {

// ----------------------------------------------------------------------------
// types

struct MasterKey {
  algebra::Scalar beta;    // current epoch secret; nonzero
  algebra::G0 g_alpha;     // g^alpha
  std::uint64_t version = 0;
  bool operator==(const MasterKey&) const = default;
};

struct EncryptionKey {
  algebra::G0 h;   // g^beta at this version
  algebra::G1 l;   // e(g,g)^alpha; never changes across versions
  std::uint64_t version = 0;
  bool operator==(const EncryptionKey&) const = default;
};

struct DecryptionKey {
  struct AttributeComponent {
    std::string attribute;
    algebra::G0 d_attr;   // g^r * H(attribute)^{r_j}
    algebra::G0 d_prime;  // g^{r_j}
    bool operator==(const AttributeComponent&) const = default;
  };
  algebra::G0 d;  // g^{(alpha+r)/beta}; the only component touched by updates
  std::vector<AttributeComponent> components;  // sorted by attribute, unique
  std::uint64_t version = 0;

  std::vector<std::string> attributes() const;
  bool operator==(const DecryptionKey&) const = default;
};

struct Ciphertext {
  struct LeafComponent {
    std::uint32_t index;   // leaf position within the policy tree
    algebra::G0 c_leaf;    // g^{q_y(0)}
    algebra::G0 c_prime;   // H(attribute at y)^{q_y(0)}
    bool operator==(const LeafComponent&) const = default;
  };
  policy::Policy access_policy;
  algebra::G1 c_tilde;  // message * l^s
  algebra::G0 c;        // h^s; the only component touched by updates
  std::vector<LeafComponent> leaves;  // pre-order over policy leaves
  std::uint64_t version = 0;
  bool operator==(const Ciphertext&) const = default;
};

// Everything needed to move the system from version-1 to `version`. The two
// scalars are reciprocal: u_cp * u_dk = 1.
struct UpdateKey {
  std::uint64_t version = 0;  // target version; the first record has version 1
  algebra::Scalar u_cp;       // beta_new / beta_old: lifts ciphertexts
  algebra::G0 u_ek;           // g^{beta_new}: replaces the encryption key's h
  algebra::Scalar u_dk;       // beta_old / beta_new: lifts decryption keys
  bool operator==(const UpdateKey&) const = default;
};

// A scalar bound to the version it lifts to; update ranges are passed as
// contiguous ascending lists of these.
struct VersionedScalar {
  std::uint64_t version;
  algebra::Scalar value;
};

// ----------------------------------------------------------------------------
// the eight primitives

std::pair<MasterKey, EncryptionKey> setup(algebra::Rng& rng);

// No failure modes: the policy and key types enforce their own invariants.
Ciphertext encrypt(const algebra::G1& message, const policy::Policy& access_policy,
                   const EncryptionKey& ek, algebra::Rng& rng);

// Duplicate attributes collapse; empty or invalid attribute sets are refused.
// Costs exactly 2|gamma|+1 base-group exponentiations.
Result<DecryptionKey> keygen(const MasterKey& mk,
                             std::span<const std::string> attributes,
                             algebra::Rng& rng);

// Succeeds iff the key's attributes satisfy the ciphertext policy AND both
// versions match. The failures are distinguishable so callers know whether to
// fetch updates (stale_version) or give up (not_authorized).
Result<algebra::G1> decrypt(const Ciphertext& ct, const DecryptionKey& dk);

// Rotates the epoch secret. The returned update record's halves go their
// separate ways: u_ek to encryptors, u_cp to the ciphertext store, u_dk to
// key holders.
std::pair<MasterKey, UpdateKey> update_mk(const MasterKey& mk, algebra::Rng& rng);

// h is absolute (g^{beta_new}), so only the latest record matters no matter
// how far behind the key is. Applying a record at or below the current
// version is a stale_update error.
Result<EncryptionKey> update_ek(const EncryptionKey& ek, const algebra::G0& u_ek,
                                std::uint64_t version);

// Lift a key's anchor component across updates.version_from+1..back().version.
// The scalars multiply in the exponent field first, so this is one
// exponentiation regardless of range length; an empty range returns the
// component unchanged (still one uniform exponentiation by 1). A gap or
// misaligned start is a missing_update error.
Result<algebra::G0> update_dk_component(const algebra::G0& d,
                                        std::uint64_t version_from,
                                        std::span<const VersionedScalar> updates);

// Whole-key convenience over update_dk_component.
Result<DecryptionKey> update_dk(const DecryptionKey& dk,
                                std::span<const VersionedScalar> updates);

// Lift a ciphertext: only the version-bound component and the counter change;
// the blinded message, leaf pairs, and policy are untouched. One
// exponentiation regardless of range length.
Result<Ciphertext> update_cp(const Ciphertext& ct,
                             std::span<const VersionedScalar> updates);

// ----------------------------------------------------------------------------
// serialization
//
// Layout per type: 2-byte type tag, 8-byte version, then fields; element
// lists are length-prefixed and deterministic (pre-order for ciphertext
// leaves, attribute-sorted for key components). Decoders validate structure,
// element encodings, and cross-references (ciphertext leaves must mirror the
// policy's leaf positions).

void serialize(const MasterKey&, ByteWriter&);
void serialize(const EncryptionKey&, ByteWriter&);
void serialize(const DecryptionKey&, ByteWriter&);
void serialize(const Ciphertext&, ByteWriter&);
void serialize(const UpdateKey&, ByteWriter&);

Result<MasterKey> deserialize_master_key(ByteReader&);
Result<EncryptionKey> deserialize_encryption_key(ByteReader&);
Result<DecryptionKey> deserialize_decryption_key(ByteReader&);
Result<Ciphertext> deserialize_ciphertext(ByteReader&);
Result<UpdateKey> deserialize_update_key(ByteReader&);

}  // namespace seabrew::abe
