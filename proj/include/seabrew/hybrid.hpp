#pragma once
// Symmetric data path layered over the attribute scheme. A producer keeps a
// table of ⟨key id, policy, symmetric key⟩ records: the first message under a
// policy mints a fresh record and wraps its key once under the attribute
// scheme (a KEM: the attribute layer encrypts a random pairing value, and the
// symmetric key is derived from it); every later message under the same
// policy reuses the record and costs only symmetric work. Consumers rebuild
// records from the wrapped keys they download.
//
// Every outbound object is signed; receivers verify against a table of known
// producer verification keys before doing anything else, so removing a
// producer from that table silences it system-wide.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "seabrew/abe.hpp"
#include "seabrew/bytes.hpp"
#include "seabrew/crypto.hpp"
#include "seabrew/policy.hpp"
#include "seabrew/result.hpp"

namespace seabrew::hybrid {

inline constexpr std::size_t kKidBytes = 16;
using Kid = std::array<std::uint8_t, kKidBytes>;

struct SymKeyRecord {
  Kid kid{};
  policy::Policy access_policy;
  std::array<std::uint8_t, crypto::kAeadKeyBytes> sym_key{};
  bool operator==(const SymKeyRecord&) const = default;
};

// The one-time upload that lets authorized consumers recover a record: the
// record's key wrapped under the attribute scheme, signed by the producer.
// The signature covers kid || ciphertext with the ciphertext's two
// rebase-mutable fields (version counter, version-bound component)
// normalized, so the storage service can move the object to a newer
// revocation epoch without breaking producer authenticity.
struct SigncryptedKey {
  Kid kid{};
  Bytes ciphertext;  // serialized attribute-scheme ciphertext of the KEM value
  std::uint64_t pid = 0;
  std::array<std::uint8_t, crypto::kSignatureBytes> signature{};
  bool operator==(const SigncryptedKey&) const = default;
};

// A data object: AEAD output (nonce || body || tag) under a record's key,
// signed by the producer. The signature covers kid || ciphertext; the AEAD
// additionally binds the kid as associated data.
struct SigncryptedData {
  Kid kid{};
  Bytes ciphertext;
  std::uint64_t pid = 0;
  std::array<std::uint8_t, crypto::kSignatureBytes> signature{};
  bool operator==(const SigncryptedData&) const = default;
};

// Producer verification keys by producer id; removal revokes the producer.
using SignatureTable = std::unordered_map<std::uint64_t, algebra::G0>;

// Per-endpoint store of symmetric-key records. Lookup by policy uses
// structural tree equality (two spellings of the same tree hit the same
// record); lookup by key id serves the receive path. Wiped wholesale at each
// revocation epoch, which forces fresh keys (key ids are never reused).
class SymKeyTable {
 public:
  const SymKeyRecord* find_by_policy(const policy::Policy& p) const;
  const SymKeyRecord* find_by_kid(const Kid& kid) const;
  // Inserts a record; a record with the same kid or policy must not exist.
  void insert(SymKeyRecord record);
  void wipe();
  std::size_t size() const { return records_.size(); }
  const std::vector<SymKeyRecord>& records() const { return records_; }

 private:
  std::vector<SymKeyRecord> records_;
  std::unordered_map<std::string, std::size_t> by_policy_;
  std::unordered_map<std::string, std::size_t> by_kid_;
};

// Returns the table's record for `access_policy`, minting one on first use.
// A minted record comes with the signed wrapped key to upload; a table hit
// uploads nothing.
std::pair<SymKeyRecord, std::optional<SigncryptedKey>> get_or_create_symkey(
    SymKeyTable& table, const policy::Policy& access_policy,
    const abe::EncryptionKey& ek, std::uint64_t pid,
    const crypto::SigningKey& producer_key, algebra::Rng& rng);

// Recover a record from a downloaded wrapped key: parse, verify the
// producer's signature over the signable view, then unwrap through the
// attribute scheme with `dk`. Failure order: unknown_producer, then
// decode_error (an unparseable object has no signable view), then
// bad_signature, then stale_version / not_authorized from the unwrap.
Result<SymKeyRecord> open_signcrypted_key(const SigncryptedKey& sk,
                                          const abe::DecryptionKey& dk,
                                          const SignatureTable& producers);

SigncryptedData signcrypt_data(const SymKeyRecord& record,
                               std::span<const std::uint8_t> plaintext,
                               std::uint64_t pid,
                               const crypto::SigningKey& producer_key,
                               algebra::Rng& rng);

// Receive path: verify the signature first, then look up the record. A
// missing record is the need_key signal — fetch the wrapped key for sd.kid
// and retry; nothing about the object is trusted until the AEAD opens.
Result<Bytes> unsigncrypt_data(const SigncryptedData& sd,
                               const SymKeyTable& table,
                               const SignatureTable& producers);

// Storage-side producer checks: no decryption key needed, so a store can
// vet an upload before accepting it. The key check parses the wrapped
// ciphertext to rebuild the signable view (decode_error when it cannot).
Status verify_signcrypted_key(const SigncryptedKey& sk,
                              const algebra::G0& producer_pub);
Status verify_signcrypted_data(const SigncryptedData& sd,
                               const algebra::G0& producer_pub);

// Wire formats: tag byte, 16-byte kid, length-prefixed ciphertext, 8-byte
// producer id, length-prefixed signature.
Bytes serialize(const SigncryptedKey& sk);
Bytes serialize(const SigncryptedData& sd);
Result<SigncryptedKey> deserialize_signcrypted_key(ByteReader& r);
Result<SigncryptedData> deserialize_signcrypted_data(ByteReader& r);

}  // namespace seabrew::hybrid
