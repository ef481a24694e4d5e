#include "seabrew/hybrid.hpp"

#include <algorithm>
#include <cassert>
#include <string>

namespace seabrew::hybrid {
namespace {

constexpr std::uint8_t kTagSigncryptedKey = 0x31;
constexpr std::uint8_t kTagSigncryptedData = 0x32;
constexpr std::string_view kKemTag = "SEABREW-KEM-v1";

std::string policy_fingerprint(const policy::Policy& p) {
  ByteWriter w;
  p.serialize(w);
  const Bytes b = w.take();
  return std::string(b.begin(), b.end());
}

std::string kid_key(const Kid& kid) {
  return std::string(kid.begin(), kid.end());
}

Bytes signed_message(const Kid& kid, const Bytes& ciphertext) {
  Bytes msg;
  msg.reserve(kid.size() + ciphertext.size());
  msg.insert(msg.end(), kid.begin(), kid.end());
  msg.insert(msg.end(), ciphertext.begin(), ciphertext.end());
  return msg;
}

// The storage service rebases wrapped keys to newer revocation epochs, which
// rewrites exactly two ciphertext fields: the version counter and the
// version-bound component. Producer signatures cover the ciphertext with
// those fields normalized so authenticity survives the rebase; end-to-end
// integrity of the payload is the AEAD's job.
Bytes signable_key_message(const Kid& kid, const abe::Ciphertext& ct) {
  abe::Ciphertext view = ct;
  view.version = 0;
  view.c = algebra::g0_identity();
  ByteWriter w;
  abe::serialize(view, w);
  return signed_message(kid, w.take());
}

std::array<std::uint8_t, crypto::kAeadKeyBytes> derive_sym_key(
    const algebra::G1& element) {
  const auto bytes = algebra::g1_to_bytes(element);
  const Bytes key = crypto::kdf(kKemTag, bytes, crypto::kAeadKeyBytes);
  std::array<std::uint8_t, crypto::kAeadKeyBytes> out{};
  std::copy(key.begin(), key.end(), out.begin());
  return out;
}

Error decode_err(const char* what) { return Error{Errc::decode_error, what}; }

// Producer lookup and full-coverage signature check for the data path.
Status check_producer(const SignatureTable& producers, std::uint64_t pid,
                      const Kid& kid, const Bytes& ciphertext,
                      std::span<const std::uint8_t> signature) {
  auto it = producers.find(pid);
  if (it == producers.end())
    return Error{Errc::unknown_producer,
                 "producer " + std::to_string(pid) + " is not in the signature table"};
  if (!crypto::verify(it->second, signed_message(kid, ciphertext), signature))
    return Error{Errc::bad_signature, "producer signature does not verify"};
  return {};
}

Error bad_sig() {
  return Error{Errc::bad_signature, "producer signature does not verify"};
}

}  // namespace

// ----------------------------------------------------------------------------
// table

const SymKeyRecord* SymKeyTable::find_by_policy(const policy::Policy& p) const {
  auto it = by_policy_.find(policy_fingerprint(p));
  return it == by_policy_.end() ? nullptr : &records_[it->second];
}

const SymKeyRecord* SymKeyTable::find_by_kid(const Kid& kid) const {
  auto it = by_kid_.find(kid_key(kid));
  return it == by_kid_.end() ? nullptr : &records_[it->second];
}

void SymKeyTable::insert(SymKeyRecord record) {
  const std::string pk = policy_fingerprint(record.access_policy);
  const std::string kk = kid_key(record.kid);
  assert(by_policy_.find(pk) == by_policy_.end());
  assert(by_kid_.find(kk) == by_kid_.end());
  by_policy_.emplace(pk, records_.size());
  by_kid_.emplace(kk, records_.size());
  records_.push_back(std::move(record));
}

void SymKeyTable::wipe() {
  records_.clear();
  by_policy_.clear();
  by_kid_.clear();
}

// ----------------------------------------------------------------------------
// send path

std::pair<SymKeyRecord, std::optional<SigncryptedKey>> get_or_create_symkey(
    SymKeyTable& table, const policy::Policy& access_policy,
    const abe::EncryptionKey& ek, std::uint64_t pid,
    const crypto::SigningKey& producer_key, algebra::Rng& rng) {
  if (const SymKeyRecord* hit = table.find_by_policy(access_policy))
    return {*hit, std::nullopt};

  SymKeyRecord record;
  rng.fill(record.kid);
  record.access_policy = access_policy;
  const algebra::G1 element = algebra::random_g1(rng);
  record.sym_key = derive_sym_key(element);

  SigncryptedKey upload;
  upload.kid = record.kid;
  const abe::Ciphertext wrapped = abe::encrypt(element, access_policy, ek, rng);
  ByteWriter w;
  abe::serialize(wrapped, w);
  upload.ciphertext = w.take();
  upload.pid = pid;
  upload.signature =
      crypto::sign(producer_key, signable_key_message(upload.kid, wrapped));
  table.insert(record);
  return {std::move(record), std::move(upload)};
}

SigncryptedData signcrypt_data(const SymKeyRecord& record,
                               std::span<const std::uint8_t> plaintext,
                               std::uint64_t pid,
                               const crypto::SigningKey& producer_key,
                               algebra::Rng& rng) {
  SigncryptedData sd;
  sd.kid = record.kid;
  std::array<std::uint8_t, crypto::kAeadNonceBytes> nonce{};
  rng.fill(nonce);
  sd.ciphertext.assign(nonce.begin(), nonce.end());
  const Bytes sealed = crypto::aead_seal(record.sym_key, nonce, record.kid, plaintext);
  sd.ciphertext.insert(sd.ciphertext.end(), sealed.begin(), sealed.end());
  sd.pid = pid;
  sd.signature = crypto::sign(producer_key, signed_message(sd.kid, sd.ciphertext));
  return sd;
}

// ----------------------------------------------------------------------------
// receive path

Result<SymKeyRecord> open_signcrypted_key(const SigncryptedKey& sk,
                                          const abe::DecryptionKey& dk,
                                          const SignatureTable& producers) {
  auto it = producers.find(sk.pid);
  if (it == producers.end())
    return Error{Errc::unknown_producer,
                 "producer " + std::to_string(sk.pid) +
                     " is not in the signature table"};
  // The signable view is computed from the parsed ciphertext, so decoding
  // comes first; a byte string with no parse has no producer either.
  ByteReader r(sk.ciphertext);
  auto ct = abe::deserialize_ciphertext(r);
  if (!ct.ok()) return ct.error();
  if (!r.done()) return decode_err("trailing bytes after wrapped key");
  if (!crypto::verify(it->second, signable_key_message(sk.kid, ct.value()),
                      sk.signature))
    return bad_sig();
  auto element = abe::decrypt(ct.value(), dk);
  if (!element.ok()) return element.error();
  SymKeyRecord record;
  record.kid = sk.kid;
  record.access_policy = ct.value().access_policy;
  record.sym_key = derive_sym_key(element.value());
  return record;
}

Result<Bytes> unsigncrypt_data(const SigncryptedData& sd,
                               const SymKeyTable& table,
                               const SignatureTable& producers) {
  if (auto s = check_producer(producers, sd.pid, sd.kid, sd.ciphertext, sd.signature);
      !s.ok())
    return s.error();
  const SymKeyRecord* record = table.find_by_kid(sd.kid);
  if (record == nullptr)
    return Error{Errc::need_key, "no record for this key id; download the wrapped key"};
  if (sd.ciphertext.size() < crypto::kAeadNonceBytes + crypto::kAeadTagBytes)
    return Error{Errc::aead_failure, "ciphertext too short"};
  const std::span<const std::uint8_t> ct(sd.ciphertext);
  auto body = crypto::aead_open(record->sym_key, ct.first(crypto::kAeadNonceBytes),
                                sd.kid, ct.subspan(crypto::kAeadNonceBytes));
  if (!body) return Error{Errc::aead_failure, "authenticated decryption failed"};
  return *std::move(body);
}

Status verify_signcrypted_key(const SigncryptedKey& sk,
                              const algebra::G0& producer_pub) {
  ByteReader r(sk.ciphertext);
  auto ct = abe::deserialize_ciphertext(r);
  if (!ct.ok()) return ct.error();
  if (!r.done()) return decode_err("trailing bytes after wrapped key");
  if (!crypto::verify(producer_pub, signable_key_message(sk.kid, ct.value()),
                      sk.signature))
    return bad_sig();
  return {};
}

Status verify_signcrypted_data(const SigncryptedData& sd,
                               const algebra::G0& producer_pub) {
  if (!crypto::verify(producer_pub, signed_message(sd.kid, sd.ciphertext),
                      sd.signature))
    return bad_sig();
  return {};
}

// ----------------------------------------------------------------------------
// wire formats

namespace {

template <typename T>
Bytes serialize_object(std::uint8_t tag, const T& obj) {
  ByteWriter w;
  w.u8(tag);
  w.raw(obj.kid);
  w.blob(obj.ciphertext);
  w.u64(obj.pid);
  w.blob(obj.signature);
  return w.take();
}

template <typename T>
Result<T> deserialize_object(std::uint8_t tag, ByteReader& r) {
  if (r.u8() != tag || !r.ok()) return decode_err("wrong object tag");
  T obj;
  auto kid = r.raw(kKidBytes);
  if (!r.ok()) return decode_err("truncated key id");
  std::copy(kid.begin(), kid.end(), obj.kid.begin());
  obj.ciphertext = r.blob();
  obj.pid = r.u64();
  const Bytes sig = r.blob();
  if (!r.ok()) return decode_err("truncated object");
  if (sig.size() != crypto::kSignatureBytes) return decode_err("bad signature length");
  std::copy(sig.begin(), sig.end(), obj.signature.begin());
  return obj;
}

}  // namespace

Bytes serialize(const SigncryptedKey& sk) {
  return serialize_object(kTagSigncryptedKey, sk);
}

Bytes serialize(const SigncryptedData& sd) {
  return serialize_object(kTagSigncryptedData, sd);
}

Result<SigncryptedKey> deserialize_signcrypted_key(ByteReader& r) {
  return deserialize_object<SigncryptedKey>(kTagSigncryptedKey, r);
}

Result<SigncryptedData> deserialize_signcrypted_data(ByteReader& r) {
  return deserialize_object<SigncryptedData>(kTagSigncryptedData, r);
}

}  // namespace seabrew::hybrid
