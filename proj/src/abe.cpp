#include "seabrew/abe.hpp"

#include <set>
#include <unordered_map>

namespace seabrew::abe {
namespace {

using algebra::G0;
using algebra::G1;
using algebra::Scalar;

constexpr std::uint16_t kTagMasterKey = 0x0101;
constexpr std::uint16_t kTagEncryptionKey = 0x0102;
constexpr std::uint16_t kTagDecryptionKey = 0x0103;
constexpr std::uint16_t kTagCiphertext = 0x0104;
constexpr std::uint16_t kTagUpdateKey = 0x0105;

// Validate that `updates` lifts contiguously from `from`, and collapse the
// range into a single exponent (empty range = 1).
Result<Scalar> range_product(std::uint64_t from,
                             std::span<const VersionedScalar> updates) {
  Scalar product = Scalar::from_u64(1);
  std::uint64_t expect = from + 1;
  for (const auto& u : updates) {
    if (u.version != expect)
      return Error{Errc::missing_update,
                   "expected update for version " + std::to_string(expect) +
                       ", got " + std::to_string(u.version)};
    ++expect;
    product = product * u.value;
  }
  return product;
}

// F_y = e(D_j, C_y) * e(D'_j, -C'_y): the quotient of two pairings taken by
// negating one input point, which costs no metered exponentiation.
G1 leaf_value(const DecryptionKey::AttributeComponent& ac,
              const Ciphertext::LeafComponent& lc) {
  return algebra::g1_mul(algebra::pairing(ac.d_attr, lc.c_leaf),
                         algebra::pairing(ac.d_prime, algebra::g0_neg(lc.c_prime)));
}

struct DecryptContext {
  const policy::SelectionPlan& plan;
  const std::unordered_map<std::uint32_t, const Ciphertext::LeafComponent*>& leaves;
  const std::unordered_map<std::string_view, const DecryptionKey::AttributeComponent*>&
      components;
};

// DecryptNode recursion, flattened: a node's Lagrange weight is the product
// of the coefficients on its path from the root, so weights compose in the
// (unmetered) scalar field and each chosen leaf pays exactly one G1
// exponentiation. That keeps the recombination cost at one exponentiation per
// selected leaf for every tree shape, bare-leaf policies included.
void decrypt_node(const policy::Node& node, const Scalar& weight,
                  const DecryptContext& ctx, G1& acc) {
  if (node.is_leaf()) {
    const auto* lc = ctx.leaves.at(node.index);
    const auto* ac = ctx.components.at(node.attribute);
    acc = algebra::g1_mul(acc, algebra::g1_exp(leaf_value(*ac, *lc), weight));
    return;
  }
  const auto& chosen = ctx.plan.chosen.at(node.index);
  for (std::uint32_t idx : chosen) {
    const policy::Node* child = nullptr;
    for (const auto& ch : node.children)
      if (ch.index == idx) { child = &ch; break; }
    decrypt_node(*child, weight * policy::lagrange_coeff(idx, chosen), ctx, acc);
  }
}

void write_g0(ByteWriter& w, const G0& p) { w.raw(algebra::g0_to_bytes(p)); }
void write_g1(ByteWriter& w, const G1& v) { w.raw(algebra::g1_to_bytes(v)); }
void write_scalar(ByteWriter& w, const Scalar& s) { w.raw(s.to_bytes()); }

bool read_g0(ByteReader& r, G0& out) {
  auto b = r.raw(algebra::kG0Bytes);
  if (!r.ok()) return false;
  auto p = algebra::g0_from_bytes(b);
  if (!p) return false;
  out = *p;
  return true;
}

bool read_g1(ByteReader& r, G1& out) {
  auto b = r.raw(algebra::kG1Bytes);
  if (!r.ok()) return false;
  auto v = algebra::g1_from_bytes(b);
  if (!v) return false;
  out = *v;
  return true;
}

bool read_scalar(ByteReader& r, Scalar& out) {
  auto b = r.raw(algebra::kScalarBytes);
  if (!r.ok()) return false;
  auto s = Scalar::from_bytes(b);
  if (!s) return false;
  out = *s;
  return true;
}

Error decode_err(const char* what) { return Error{Errc::decode_error, what}; }

Result<std::uint64_t> read_header(ByteReader& r, std::uint16_t want_tag) {
  const std::uint16_t tag = r.u16();
  const std::uint64_t version = r.u64();
  if (!r.ok()) return decode_err("truncated header");
  if (tag != want_tag) return decode_err("wrong type tag");
  return version;
}

}  // namespace

std::vector<std::string> DecryptionKey::attributes() const {
  std::vector<std::string> out;
  out.reserve(components.size());
  for (const auto& c : components) out.push_back(c.attribute);
  return out;
}

// ----------------------------------------------------------------------------
// primitives

std::pair<MasterKey, EncryptionKey> setup(algebra::Rng& rng) {
  const Scalar alpha = Scalar::random_nonzero(rng);
  MasterKey mk;
  mk.beta = Scalar::random_nonzero(rng);
  mk.g_alpha = algebra::g0_exp(algebra::g0_generator(), alpha);
  EncryptionKey ek;
  ek.h = algebra::g0_exp(algebra::g0_generator(), mk.beta);
  ek.l = algebra::g1_exp(algebra::group().pairing_of_generators, alpha);
  return {std::move(mk), std::move(ek)};
}

Ciphertext encrypt(const G1& message, const policy::Policy& access_policy,
                   const EncryptionKey& ek, algebra::Rng& rng) {
  const Scalar s = Scalar::random(rng);
  Ciphertext ct;
  ct.access_policy = access_policy;
  ct.version = ek.version;
  {
    algebra::Meter::Scope scope("encrypt.blinding");
    ct.c_tilde = algebra::g1_mul(message, algebra::g1_exp(ek.l, s));
  }
  {
    algebra::Meter::Scope scope("encrypt.version-binding");
    ct.c = algebra::g0_exp(ek.h, s);
  }
  {
    algebra::Meter::Scope scope("encrypt.leaf-shares");
    auto shares = access_policy.share_secret(s, rng);
    ct.leaves.reserve(shares.size());
    for (const auto& sh : shares) {
      Ciphertext::LeafComponent lc;
      lc.index = sh.index;
      lc.c_leaf = algebra::g0_exp(algebra::g0_generator(), sh.share);
      lc.c_prime = algebra::g0_exp(algebra::hash_to_g0(sh.attribute), sh.share);
      ct.leaves.push_back(std::move(lc));
    }
  }
  return ct;
}

Result<DecryptionKey> keygen(const MasterKey& mk,
                             std::span<const std::string> attributes,
                             algebra::Rng& rng) {
  std::set<std::string> unique(attributes.begin(), attributes.end());
  if (unique.empty())
    return Error{Errc::argument_error, "attribute set must not be empty"};
  for (const auto& a : unique)
    if (!policy::is_valid_attribute(a))
      return Error{Errc::argument_error, "invalid attribute token: " + a};
  const auto beta_inv = mk.beta.inverse();
  if (!beta_inv)
    return Error{Errc::argument_error, "master key epoch secret is zero"};

  const Scalar r = Scalar::random(rng);
  DecryptionKey dk;
  dk.version = mk.version;
  // D = g^{(alpha+r)/beta} = (g^alpha)^{1/beta} * g^{r/beta}: one ladder
  dk.d = algebra::g0_double_exp(mk.g_alpha, *beta_inv, algebra::g0_generator(),
                                r * *beta_inv);
  dk.components.reserve(unique.size());
  for (const auto& attr : unique) {
    const Scalar r_j = Scalar::random(rng);
    DecryptionKey::AttributeComponent ac;
    ac.attribute = attr;
    // D_j = g^r * H(j)^{r_j}: one ladder
    ac.d_attr = algebra::g0_double_exp(algebra::g0_generator(), r,
                                       algebra::hash_to_g0(attr), r_j);
    ac.d_prime = algebra::g0_exp(algebra::g0_generator(), r_j);
    dk.components.push_back(std::move(ac));
  }
  return dk;
}

Result<G1> decrypt(const Ciphertext& ct, const DecryptionKey& dk) {
  if (ct.version != dk.version)
    return Error{Errc::stale_version,
                 "ciphertext version " + std::to_string(ct.version) +
                     " does not match key version " + std::to_string(dk.version)};
  const auto attrs = dk.attributes();
  const auto plan = ct.access_policy.selection(attrs);
  if (!plan)
    return Error{Errc::not_authorized,
                 "attribute set does not satisfy the access policy"};

  std::unordered_map<std::uint32_t, const Ciphertext::LeafComponent*> leaves;
  leaves.reserve(ct.leaves.size());
  for (const auto& lc : ct.leaves) leaves.emplace(lc.index, &lc);
  std::unordered_map<std::string_view, const DecryptionKey::AttributeComponent*>
      components;
  components.reserve(dk.components.size());
  for (const auto& ac : dk.components) components.emplace(ac.attribute, &ac);
  for (std::uint32_t idx : plan->leaf_indexes)
    if (leaves.find(idx) == leaves.end())
      return Error{Errc::argument_error, "ciphertext leaf components incomplete"};

  G1 a = algebra::g1_identity();
  decrypt_node(ct.access_policy.root(), Scalar::from_u64(1),
               {*plan, leaves, components}, a);
  // M = C~ / (e(C, D) / A): both divisions metered as exponentiations
  const G1 e_cd = algebra::pairing(ct.c, dk.d);
  const G1 masked = algebra::g1_mul(e_cd, algebra::g1_inverse(a));
  return algebra::g1_mul(ct.c_tilde, algebra::g1_inverse(masked));
}

std::pair<MasterKey, UpdateKey> update_mk(const MasterKey& mk, algebra::Rng& rng) {
  MasterKey next;
  next.beta = Scalar::random_nonzero(rng);
  next.g_alpha = mk.g_alpha;
  next.version = mk.version + 1;
  UpdateKey uk;
  uk.version = next.version;
  uk.u_cp = next.beta * mk.beta.inverse().value();
  uk.u_dk = mk.beta * next.beta.inverse().value();
  uk.u_ek = algebra::g0_exp(algebra::g0_generator(), next.beta);
  return {std::move(next), std::move(uk)};
}

Result<EncryptionKey> update_ek(const EncryptionKey& ek, const G0& u_ek,
                                std::uint64_t version) {
  if (version <= ek.version)
    return Error{Errc::stale_update,
                 "update targets version " + std::to_string(version) +
                     " but the key is already at " + std::to_string(ek.version)};
  EncryptionKey next;
  next.h = u_ek;
  next.l = ek.l;
  next.version = version;
  return next;
}

Result<G0> update_dk_component(const G0& d, std::uint64_t version_from,
                               std::span<const VersionedScalar> updates) {
  auto product = range_product(version_from, updates);
  if (!product.ok()) return product.error();
  return algebra::g0_exp(d, product.value());
}

Result<DecryptionKey> update_dk(const DecryptionKey& dk,
                                std::span<const VersionedScalar> updates) {
  auto d = update_dk_component(dk.d, dk.version, updates);
  if (!d.ok()) return d.error();
  DecryptionKey next = dk;
  next.d = d.take();
  if (!updates.empty()) next.version = updates.back().version;
  return next;
}

Result<Ciphertext> update_cp(const Ciphertext& ct,
                             std::span<const VersionedScalar> updates) {
  auto product = range_product(ct.version, updates);
  if (!product.ok()) return product.error();
  Ciphertext next = ct;
  next.c = algebra::g0_exp(ct.c, product.value());
  if (!updates.empty()) next.version = updates.back().version;
  return next;
}

// ----------------------------------------------------------------------------
// serialization

void serialize(const MasterKey& mk, ByteWriter& w) {
  w.u16(kTagMasterKey);
  w.u64(mk.version);
  write_scalar(w, mk.beta);
  write_g0(w, mk.g_alpha);
}

void serialize(const EncryptionKey& ek, ByteWriter& w) {
  w.u16(kTagEncryptionKey);
  w.u64(ek.version);
  write_g0(w, ek.h);
  write_g1(w, ek.l);
}

void serialize(const DecryptionKey& dk, ByteWriter& w) {
  w.u16(kTagDecryptionKey);
  w.u64(dk.version);
  write_g0(w, dk.d);
  w.u32(static_cast<std::uint32_t>(dk.components.size()));
  for (const auto& ac : dk.components) {
    w.str(ac.attribute);
    write_g0(w, ac.d_attr);
    write_g0(w, ac.d_prime);
  }
}

void serialize(const Ciphertext& ct, ByteWriter& w) {
  w.u16(kTagCiphertext);
  w.u64(ct.version);
  ct.access_policy.serialize(w);
  write_g1(w, ct.c_tilde);
  write_g0(w, ct.c);
  w.u32(static_cast<std::uint32_t>(ct.leaves.size()));
  for (const auto& lc : ct.leaves) {
    w.u32(lc.index);
    write_g0(w, lc.c_leaf);
    write_g0(w, lc.c_prime);
  }
}

void serialize(const UpdateKey& uk, ByteWriter& w) {
  w.u16(kTagUpdateKey);
  w.u64(uk.version);
  write_scalar(w, uk.u_cp);
  write_g0(w, uk.u_ek);
  write_scalar(w, uk.u_dk);
}

Result<MasterKey> deserialize_master_key(ByteReader& r) {
  auto version = read_header(r, kTagMasterKey);
  if (!version.ok()) return version.error();
  MasterKey mk;
  mk.version = version.value();
  if (!read_scalar(r, mk.beta)) return decode_err("bad epoch secret");
  if (mk.beta.is_zero()) return decode_err("epoch secret must be nonzero");
  if (!read_g0(r, mk.g_alpha)) return decode_err("bad anchor element");
  return mk;
}

Result<EncryptionKey> deserialize_encryption_key(ByteReader& r) {
  auto version = read_header(r, kTagEncryptionKey);
  if (!version.ok()) return version.error();
  EncryptionKey ek;
  ek.version = version.value();
  if (!read_g0(r, ek.h)) return decode_err("bad version-bound element");
  if (!read_g1(r, ek.l)) return decode_err("bad blinding base");
  return ek;
}

Result<DecryptionKey> deserialize_decryption_key(ByteReader& r) {
  auto version = read_header(r, kTagDecryptionKey);
  if (!version.ok()) return version.error();
  DecryptionKey dk;
  dk.version = version.value();
  if (!read_g0(r, dk.d)) return decode_err("bad anchor component");
  const std::uint32_t count = r.u32();
  if (!r.ok()) return decode_err("truncated component list");
  if (count == 0) return decode_err("key must carry at least one attribute");
  if (count > (1u << 20)) return decode_err("component list too large");
  dk.components.reserve(count);
  std::string prev;
  for (std::uint32_t i = 0; i < count; ++i) {
    DecryptionKey::AttributeComponent ac;
    ac.attribute = r.str();
    if (!r.ok()) return decode_err("truncated attribute");
    if (!policy::is_valid_attribute(ac.attribute))
      return decode_err("invalid attribute token");
    if (i > 0 && !(prev < ac.attribute))
      return decode_err("attributes must be sorted and unique");
    prev = ac.attribute;
    if (!read_g0(r, ac.d_attr) || !read_g0(r, ac.d_prime))
      return decode_err("bad attribute component");
    dk.components.push_back(std::move(ac));
  }
  return dk;
}

Result<Ciphertext> deserialize_ciphertext(ByteReader& r) {
  auto version = read_header(r, kTagCiphertext);
  if (!version.ok()) return version.error();
  Ciphertext ct;
  ct.version = version.value();
  auto pol = policy::Policy::deserialize(r);
  if (!pol.ok()) return pol.error();
  ct.access_policy = pol.take();
  if (!read_g1(r, ct.c_tilde)) return decode_err("bad blinded message");
  if (!read_g0(r, ct.c)) return decode_err("bad version-bound component");
  const std::uint32_t count = r.u32();
  if (!r.ok()) return decode_err("truncated leaf list");
  const auto policy_leaves = ct.access_policy.leaves();
  if (count != policy_leaves.size())
    return decode_err("leaf components do not match the policy");
  ct.leaves.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Ciphertext::LeafComponent lc;
    lc.index = r.u32();
    if (!r.ok()) return decode_err("truncated leaf component");
    if (lc.index != policy_leaves[i]->index)
      return decode_err("leaf components do not match the policy");
    if (!read_g0(r, lc.c_leaf) || !read_g0(r, lc.c_prime))
      return decode_err("bad leaf component");
    ct.leaves.push_back(std::move(lc));
  }
  return ct;
}

Result<UpdateKey> deserialize_update_key(ByteReader& r) {
  auto version = read_header(r, kTagUpdateKey);
  if (!version.ok()) return version.error();
  UpdateKey uk;
  uk.version = version.value();
  if (!read_scalar(r, uk.u_cp)) return decode_err("bad ciphertext lift");
  if (!read_g0(r, uk.u_ek)) return decode_err("bad encryption-key element");
  if (!read_scalar(r, uk.u_dk)) return decode_err("bad key lift");
  if (!(uk.u_cp * uk.u_dk == Scalar::from_u64(1)))
    return decode_err("lift scalars must be reciprocal");
  return uk;
}

}  // namespace seabrew::abe
