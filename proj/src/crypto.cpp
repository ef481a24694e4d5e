#include "seabrew/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <cstring>
#include <stdexcept>

namespace seabrew::crypto {
namespace {

using algebra::G0;
using algebra::Scalar;

constexpr char kSigChallengeTag[] = "SEABREW-SIG-v1";
constexpr char kSigNonceTag[] = "SEABREW-SIG-NONCE-v1";
constexpr char kSealTag[] = "SEABREW-SEAL-v1";

void append(Bytes& out, std::span<const std::uint8_t> data) {
  out.insert(out.end(), data.begin(), data.end());
}
void append(Bytes& out, std::string_view s) {
  out.insert(out.end(), s.begin(), s.end());
}

// challenge = H512(tag || 0x00 || R || pk || msg) reduced mod r
Scalar sig_challenge(const G0& r_point, const G0& public_key,
                     std::span<const std::uint8_t> msg) {
  Bytes buf;
  buf.reserve(sizeof(kSigChallengeTag) + 2 * algebra::kG0Bytes + msg.size());
  append(buf, std::string_view(kSigChallengeTag));
  buf.push_back(0x00);
  append(buf, algebra::g0_to_bytes(r_point));
  append(buf, algebra::g0_to_bytes(public_key));
  append(buf, msg);
  return algebra::scalar_from_wide_bytes(sha512(buf));
}

}  // namespace

// ----------------------------------------------------------------------------
// hashes and KDF

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data) {
  std::array<std::uint8_t, 32> out;
  SHA256(data.data(), data.size(), out.data());
  return out;
}

std::array<std::uint8_t, 64> sha512(std::span<const std::uint8_t> data) {
  std::array<std::uint8_t, 64> out;
  SHA512(data.data(), data.size(), out.data());
  return out;
}

Bytes kdf(std::string_view label, std::span<const std::uint8_t> input,
          std::size_t out_len) {
  Bytes out;
  out.reserve(out_len);
  Bytes block_input;
  block_input.reserve(label.size() + 5 + input.size());
  append(block_input, label);
  block_input.push_back(0x00);
  std::size_t ctr_at = block_input.size();
  block_input.resize(ctr_at + 4);
  append(block_input, input);
  for (std::uint32_t i = 0; out.size() < out_len; ++i) {
    for (int k = 0; k < 4; ++k)
      block_input[ctr_at + k] = std::uint8_t(i >> (8 * (3 - k)));
    auto block = sha256(block_input);
    std::size_t take = std::min<std::size_t>(32, out_len - out.size());
    out.insert(out.end(), block.begin(), block.begin() + take);
  }
  return out;
}

// ----------------------------------------------------------------------------
// AES-256-GCM

Bytes aead_seal(std::span<const std::uint8_t> key,
                std::span<const std::uint8_t> nonce,
                std::span<const std::uint8_t> aad,
                std::span<const std::uint8_t> plaintext) {
  if (key.size() != kAeadKeyBytes || nonce.size() != kAeadNonceBytes)
    throw std::invalid_argument("bad AEAD key or nonce length");
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  if (!ctx) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
  Bytes out(plaintext.size() + kAeadTagBytes);
  int len = 0;
  bool ok = EVP_EncryptInit_ex(ctx, EVP_aes_256_gcm(), nullptr, key.data(),
                               nonce.data()) == 1;
  if (ok && !aad.empty())
    ok = EVP_EncryptUpdate(ctx, nullptr, &len, aad.data(),
                           static_cast<int>(aad.size())) == 1;
  if (ok && !plaintext.empty())
    ok = EVP_EncryptUpdate(ctx, out.data(), &len, plaintext.data(),
                           static_cast<int>(plaintext.size())) == 1;
  int fin = 0;
  if (ok) ok = EVP_EncryptFinal_ex(ctx, out.data() + len, &fin) == 1;
  if (ok)
    ok = EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_GET_TAG, kAeadTagBytes,
                             out.data() + plaintext.size()) == 1;
  EVP_CIPHER_CTX_free(ctx);
  if (!ok) throw std::runtime_error("AEAD seal failed");
  return out;
}

std::optional<Bytes> aead_open(std::span<const std::uint8_t> key,
                               std::span<const std::uint8_t> nonce,
                               std::span<const std::uint8_t> aad,
                               std::span<const std::uint8_t> sealed) {
  if (key.size() != kAeadKeyBytes || nonce.size() != kAeadNonceBytes ||
      sealed.size() < kAeadTagBytes)
    return std::nullopt;
  std::size_t ct_len = sealed.size() - kAeadTagBytes;
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  if (!ctx) return std::nullopt;
  Bytes out(ct_len);
  int len = 0;
  bool ok = EVP_DecryptInit_ex(ctx, EVP_aes_256_gcm(), nullptr, key.data(),
                               nonce.data()) == 1;
  if (ok && !aad.empty())
    ok = EVP_DecryptUpdate(ctx, nullptr, &len, aad.data(),
                           static_cast<int>(aad.size())) == 1;
  if (ok && ct_len > 0)
    ok = EVP_DecryptUpdate(ctx, out.data(), &len, sealed.data(),
                           static_cast<int>(ct_len)) == 1;
  std::uint8_t tag[kAeadTagBytes];
  std::memcpy(tag, sealed.data() + ct_len, kAeadTagBytes);
  if (ok)
    ok = EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_TAG, kAeadTagBytes, tag) == 1;
  int fin = 0;
  if (ok) ok = EVP_DecryptFinal_ex(ctx, out.data() + len, &fin) == 1;
  EVP_CIPHER_CTX_free(ctx);
  if (!ok) return std::nullopt;
  return out;
}

// ----------------------------------------------------------------------------
// Schnorr signatures

SigningKey sig_keygen(algebra::Rng& rng) {
  SigningKey key;
  key.secret = Scalar::random_nonzero(rng);
  key.public_key = algebra::g0_exp(algebra::g0_generator(), key.secret);
  return key;
}

std::array<std::uint8_t, kSignatureBytes> sign(const SigningKey& key,
                                               std::span<const std::uint8_t> msg) {
  // deterministic nonce: H512(tag || 0x00 || retry || secret || msg) mod r
  Scalar k;
  std::uint8_t retry = 0;
  do {
    Bytes buf;
    buf.reserve(sizeof(kSigNonceTag) + 2 + algebra::kScalarBytes + msg.size());
    append(buf, std::string_view(kSigNonceTag));
    buf.push_back(0x00);
    buf.push_back(retry++);
    append(buf, key.secret.to_bytes());
    append(buf, msg);
    k = algebra::scalar_from_wide_bytes(sha512(buf));
  } while (k.is_zero());
  const G0 r_point = algebra::g0_exp(algebra::g0_generator(), k);
  const Scalar c = sig_challenge(r_point, key.public_key, msg);
  const Scalar z = k + c * key.secret;
  std::array<std::uint8_t, kSignatureBytes> sig{};
  auto cb = c.to_bytes();
  auto zb = z.to_bytes();
  std::memcpy(sig.data(), cb.data(), algebra::kScalarBytes);
  std::memcpy(sig.data() + algebra::kScalarBytes, zb.data(), algebra::kScalarBytes);
  return sig;
}

bool verify(const G0& public_key, std::span<const std::uint8_t> msg,
            std::span<const std::uint8_t> signature) {
  if (signature.size() != kSignatureBytes || public_key.infinity) return false;
  auto c = Scalar::from_bytes(signature.subspan(0, algebra::kScalarBytes));
  auto z = Scalar::from_bytes(signature.subspan(algebra::kScalarBytes));
  if (!c || !z) return false;
  // R' = g^z * pk^(-c); accept iff the challenge recomputed from R' matches
  const G0 r_point =
      algebra::g0_double_exp(algebra::g0_generator(), *z, public_key, c->neg());
  return sig_challenge(r_point, public_key, msg) == *c;
}

// ----------------------------------------------------------------------------
// sealed box

Bytes seal_to(const G0& recipient, std::span<const std::uint8_t> plaintext,
              algebra::Rng& rng) {
  const Scalar eph = Scalar::random_nonzero(rng);
  const G0 eph_point = algebra::g0_exp(algebra::g0_generator(), eph);
  const G0 shared = algebra::g0_exp(recipient, eph);
  Bytes ikm;
  ikm.reserve(2 * algebra::kG0Bytes);
  append(ikm, algebra::g0_to_bytes(eph_point));
  append(ikm, algebra::g0_to_bytes(shared));
  // fresh ephemeral => (key, nonce) pair is single-use
  Bytes keys = kdf(kSealTag, ikm, kAeadKeyBytes + kAeadNonceBytes);
  std::span<const std::uint8_t> key(keys.data(), kAeadKeyBytes);
  std::span<const std::uint8_t> nonce(keys.data() + kAeadKeyBytes, kAeadNonceBytes);
  Bytes out;
  out.reserve(algebra::kG0Bytes + plaintext.size() + kAeadTagBytes);
  append(out, algebra::g0_to_bytes(eph_point));
  append(out, aead_seal(key, nonce, {}, plaintext));
  return out;
}

std::optional<Bytes> open_sealed(const Scalar& recipient_secret,
                                 std::span<const std::uint8_t> sealed) {
  if (sealed.size() < kSealOverheadBytes) return std::nullopt;
  auto eph_point = algebra::g0_from_bytes(sealed.subspan(0, algebra::kG0Bytes));
  if (!eph_point || eph_point->infinity) return std::nullopt;
  const G0 shared = algebra::g0_exp(*eph_point, recipient_secret);
  Bytes ikm;
  ikm.reserve(2 * algebra::kG0Bytes);
  append(ikm, sealed.subspan(0, algebra::kG0Bytes));
  append(ikm, algebra::g0_to_bytes(shared));
  Bytes keys = kdf(kSealTag, ikm, kAeadKeyBytes + kAeadNonceBytes);
  std::span<const std::uint8_t> key(keys.data(), kAeadKeyBytes);
  std::span<const std::uint8_t> nonce(keys.data() + kAeadKeyBytes, kAeadNonceBytes);
  return aead_open(key, nonce, {}, sealed.subspan(algebra::kG0Bytes));
}

}  // namespace seabrew::crypto
