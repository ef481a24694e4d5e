#include <doctest.h>

#include <string>
#include <vector>

#include "seabrew/abe.hpp"
#include "seabrew/policy.hpp"

using namespace seabrew;
using namespace seabrew::abe;
using algebra::CounterRng;
using algebra::G0;
using algebra::G1;
using algebra::Meter;
using algebra::MeterCounts;
using algebra::Scalar;

namespace {

std::vector<std::string> attrs(std::initializer_list<const char*> list) {
  return {list.begin(), list.end()};
}

policy::Policy parsed(std::string_view text) {
  auto p = policy::Policy::parse(text);
  REQUIRE(p.ok());
  return p.take();
}

// A single n-of-n gate over n leaves: every leaf contributes at decrypt, the
// most expensive shape per leaf count. n = 1 builds a one-child gate (which
// the grammar cannot spell) so the root recombination step still runs.
policy::Policy widest(std::uint32_t n) {
  policy::Node root;
  root.threshold = n;
  for (std::uint32_t i = 0; i < n; ++i) {
    policy::Node leaf;
    leaf.attribute = "w" + std::to_string(i);
    root.children.push_back(std::move(leaf));
  }
  auto p = policy::Policy::from_tree(std::move(root));
  REQUIRE(p.ok());
  return p.take();
}

std::vector<std::string> widest_attrs(std::uint32_t n) {
  std::vector<std::string> out;
  for (std::uint32_t i = 0; i < n; ++i) out.push_back("w" + std::to_string(i));
  return out;
}

struct MeterGuard {
  MeterGuard() {
    Meter::set_enabled(true);
    Meter::reset();
  }
  ~MeterGuard() {
    Meter::reset();
    Meter::set_enabled(false);
  }
};

Bytes encoded(const auto& object) {
  ByteWriter w;
  serialize(object, w);
  return w.take();
}

}  // namespace

TEST_CASE("setup produces a consistent key pair") {
  CounterRng rng(101);
  auto [mk, ek] = setup(rng);
  CHECK(mk.version == 0);
  CHECK(ek.version == 0);
  CHECK(!mk.beta.is_zero());
  // h = g^beta and l = e(g, g^alpha) tie the two halves together.
  CHECK(ek.h == algebra::g0_exp(algebra::g0_generator(), mk.beta));
  CHECK(ek.l == algebra::pairing(algebra::g0_generator(), mk.g_alpha));

  CounterRng rng2(102);
  auto [mk2, ek2] = setup(rng2);
  CHECK(!(mk2.beta == mk.beta));
  CHECK(!(mk2.g_alpha == mk.g_alpha));
  CHECK(!(ek2.h == ek.h));
  CHECK(!(ek2.l == ek.l));
}

TEST_CASE("encrypt and decrypt roundtrip across policy shapes") {
  CounterRng rng(2);
  auto [mk, ek] = setup(rng);

  struct Case {
    const char* policy;
    std::vector<std::string> good;
    std::vector<std::string> bad;
  };
  const std::vector<Case> cases = {
      {"a", attrs({"a"}), attrs({"b"})},
      {"a and b", attrs({"a", "b", "z"}), attrs({"a"})},
      {"a or b", attrs({"b"}), attrs({"c", "d"})},
      {"2 of (a, b, c)", attrs({"a", "c"}), attrs({"c"})},
      {"(a and b) or (c and d)", attrs({"c", "d"}), attrs({"a", "d"})},
      {"sensor:temp and (unit.1 or 2 of (x, y, z))", attrs({"sensor:temp", "y", "z"}),
       attrs({"x", "y", "z"})},
  };
  for (const auto& c : cases) {
    CAPTURE(c.policy);
    const G1 m = algebra::random_g1(rng);
    const Ciphertext ct = encrypt(m, parsed(c.policy), ek, rng);
    CHECK(ct.version == 0);
    CHECK(ct.leaves.size() == ct.access_policy.leaves().size());

    auto good_key = keygen(mk, c.good, rng);
    REQUIRE(good_key.ok());
    auto recovered = decrypt(ct, good_key.value());
    REQUIRE(recovered.ok());
    CHECK(recovered.value() == m);

    auto bad_key = keygen(mk, c.bad, rng);
    REQUIRE(bad_key.ok());
    auto refused = decrypt(ct, bad_key.value());
    REQUIRE(!refused.ok());
    CHECK(refused.code() == Errc::not_authorized);
  }
}

TEST_CASE("keygen validates its attribute set") {
  CounterRng rng(3);
  auto [mk, ek] = setup(rng);

  CHECK(keygen(mk, std::vector<std::string>{}, rng).code() == Errc::argument_error);
  CHECK(keygen(mk, attrs({"ok", "has space"}), rng).code() == Errc::argument_error);
  CHECK(keygen(mk, attrs({"and"}), rng).code() == Errc::argument_error);
  CHECK(keygen(mk, attrs({""}), rng).code() == Errc::argument_error);

  // Duplicates collapse and components come out sorted.
  auto dk = keygen(mk, attrs({"b", "a", "b", "a"}), rng);
  REQUIRE(dk.ok());
  REQUIRE(dk.value().components.size() == 2);
  CHECK(dk.value().components[0].attribute == "a");
  CHECK(dk.value().components[1].attribute == "b");
  CHECK(dk.value().attributes() == attrs({"a", "b"}));
}

TEST_CASE("independently issued keys share no group elements") {
  CounterRng rng(4);
  auto [mk, ek] = setup(rng);
  auto dk1 = keygen(mk, attrs({"a", "b"}), rng);
  auto dk2 = keygen(mk, attrs({"a", "b"}), rng);
  REQUIRE(dk1.ok());
  REQUIRE(dk2.ok());
  CHECK(!(dk1.value().d == dk2.value().d));
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(!(dk1.value().components[i].d_attr == dk2.value().components[i].d_attr));
    CHECK(!(dk1.value().components[i].d_prime == dk2.value().components[i].d_prime));
  }
  // Both keys still work.
  const G1 m = algebra::random_g1(rng);
  const Ciphertext ct = encrypt(m, parsed("a and b"), ek, rng);
  CHECK(decrypt(ct, dk1.value()).value() == m);
  CHECK(decrypt(ct, dk2.value()).value() == m);
}

TEST_CASE("version mismatch is reported before authorization") {
  CounterRng rng(5);
  auto [mk0, ek0] = setup(rng);
  auto [mk1, uk1] = update_mk(mk0, rng);

  const G1 m = algebra::random_g1(rng);
  Ciphertext ct1 = encrypt(m, parsed("a"), ek0, rng);
  ct1.version = 1;  // pretend the store lifted it

  // Key is both stale AND unauthorized; staleness wins so the caller knows
  // fetching updates may still help.
  auto unauthorized_stale = keygen(mk0, attrs({"zzz"}), rng);
  REQUIRE(unauthorized_stale.ok());
  CHECK(decrypt(ct1, unauthorized_stale.value()).code() == Errc::stale_version);

  auto authorized_stale = keygen(mk0, attrs({"a"}), rng);
  REQUIRE(authorized_stale.ok());
  CHECK(decrypt(ct1, authorized_stale.value()).code() == Errc::stale_version);

  auto fresh = keygen(mk1, attrs({"zzz"}), rng);
  REQUIRE(fresh.ok());
  CHECK(decrypt(ct1, fresh.value()).code() == Errc::not_authorized);
}

TEST_CASE("epoch rotation lifts keys and ciphertexts forward") {
  CounterRng rng(6);
  auto [mk0, ek0] = setup(rng);
  const policy::Policy pol = parsed("a and b");
  const G1 m = algebra::random_g1(rng);
  const Ciphertext ct0 = encrypt(m, pol, ek0, rng);
  auto dk0r = keygen(mk0, attrs({"a", "b"}), rng);
  REQUIRE(dk0r.ok());
  const DecryptionKey dk0 = dk0r.take();

  // Five rotations; collect the per-step lift scalars.
  MasterKey mk = mk0;
  std::vector<UpdateKey> uks;
  for (int i = 0; i < 5; ++i) {
    auto [next, uk] = update_mk(mk, rng);
    CHECK(uk.version == mk.version + 1);
    CHECK(uk.u_cp * uk.u_dk == Scalar::from_u64(1));
    CHECK(next.g_alpha == mk.g_alpha);
    mk = next;
    uks.push_back(uk);
  }
  CHECK(mk.version == 5);

  std::vector<VersionedScalar> dk_lifts, cp_lifts;
  for (const auto& uk : uks) {
    dk_lifts.push_back({uk.version, uk.u_dk});
    cp_lifts.push_back({uk.version, uk.u_cp});
  }

  SUBCASE("encryption key jumps straight to the newest version") {
    auto ek5 = update_ek(ek0, uks[4].u_ek, uks[4].version);
    REQUIRE(ek5.ok());
    CHECK(ek5.value().version == 5);
    CHECK(ek5.value().l == ek0.l);
    CHECK(ek5.value().h == algebra::g0_exp(algebra::g0_generator(), mk.beta));

    // Stepping 0 -> 3 -> 5 lands on the same key.
    auto ek3 = update_ek(ek0, uks[2].u_ek, uks[2].version);
    REQUIRE(ek3.ok());
    auto ek5b = update_ek(ek3.value(), uks[4].u_ek, uks[4].version);
    REQUIRE(ek5b.ok());
    CHECK(ek5b.value() == ek5.value());

    CHECK(update_ek(ek5.value(), uks[2].u_ek, uks[2].version).code() ==
          Errc::stale_update);
    CHECK(update_ek(ek5.value(), uks[4].u_ek, uks[4].version).code() ==
          Errc::stale_update);
  }

  SUBCASE("lifted key decrypts lifted ciphertext at any shared version") {
    auto ct5 = update_cp(ct0, cp_lifts);
    REQUIRE(ct5.ok());
    CHECK(ct5.value().version == 5);
    CHECK(ct5.value().c_tilde == ct0.c_tilde);
    CHECK(ct5.value().leaves == ct0.leaves);
    auto dk5 = update_dk(dk0, dk_lifts);
    REQUIRE(dk5.ok());
    CHECK(dk5.value().version == 5);
    CHECK(dk5.value().components == dk0.components);
    CHECK(decrypt(ct5.value(), dk5.value()).value() == m);
    CHECK(decrypt(ct5.value(), dk0).code() == Errc::stale_version);
    CHECK(decrypt(ct0, dk5.value()).code() == Errc::stale_version);

    // Partial lift to version 3 also agrees.
    std::span<const VersionedScalar> first3cp(cp_lifts.data(), 3);
    std::span<const VersionedScalar> first3dk(dk_lifts.data(), 3);
    auto ct3 = update_cp(ct0, first3cp);
    auto dk3 = update_dk(dk0, first3dk);
    REQUIRE(ct3.ok());
    REQUIRE(dk3.ok());
    CHECK(decrypt(ct3.value(), dk3.value()).value() == m);

    // A fresh key issued at version 5 opens the lifted ciphertext too.
    auto dk5fresh = keygen(mk, attrs({"a", "b"}), rng);
    REQUIRE(dk5fresh.ok());
    CHECK(decrypt(ct5.value(), dk5fresh.value()).value() == m);

    // And a fresh encryption at version 5 opens under the lifted key.
    auto ek5 = update_ek(ek0, uks[4].u_ek, uks[4].version);
    REQUIRE(ek5.ok());
    const Ciphertext ct5fresh = encrypt(m, pol, ek5.value(), rng);
    CHECK(decrypt(ct5fresh, dk5.value()).value() == m);
  }

  SUBCASE("ciphertext lift commutes with pairing against the generator") {
    auto ct5 = update_cp(ct0, cp_lifts);
    REQUIRE(ct5.ok());
    Scalar lift = Scalar::from_u64(1);
    for (const auto& v : cp_lifts) lift = lift * v.value;
    CHECK(algebra::pairing(ct5.value().c, algebra::g0_generator()) ==
          algebra::g1_exp(algebra::pairing(ct0.c, algebra::g0_generator()), lift));
  }

  SUBCASE("update ranges must be contiguous from the component's version") {
    // Gap: versions 1,2,4.
    std::vector<VersionedScalar> gapped = {dk_lifts[0], dk_lifts[1], dk_lifts[3]};
    CHECK(update_dk(dk0, gapped).code() == Errc::missing_update);
    // Misaligned start: component sits at version 0, list starts at 2.
    std::vector<VersionedScalar> late(dk_lifts.begin() + 1, dk_lifts.end());
    CHECK(update_dk(dk0, late).code() == Errc::missing_update);
    CHECK(update_cp(ct0, late).code() == Errc::missing_update);
    // Empty range: no-op at full fidelity.
    auto same = update_dk(dk0, std::span<const VersionedScalar>{});
    REQUIRE(same.ok());
    CHECK(same.value() == dk0);
  }
}

TEST_CASE("spliced key components decrypt to the wrong value") {
  CounterRng rng(7);
  auto [mk, ek] = setup(rng);
  auto alice = keygen(mk, attrs({"a"}), rng);
  auto bob = keygen(mk, attrs({"b"}), rng);
  REQUIRE(alice.ok());
  REQUIRE(bob.ok());

  DecryptionKey spliced = alice.take();
  spliced.components.push_back(bob.value().components[0]);  // "b" sorts after "a"

  const G1 m = algebra::random_g1(rng);
  const Ciphertext ct = encrypt(m, parsed("a and b"), ek, rng);
  // The raw scheme has no integrity check, so the spliced key "succeeds" —
  // but the two components carry different per-key randomness, so the result
  // is an unrelated group element, not the message.
  auto leaked = decrypt(ct, spliced);
  REQUIRE(leaked.ok());
  CHECK(!(leaked.value() == m));
}

TEST_CASE("operation costs match the scheme's published profile") {
  CounterRng rng(8);
  auto [mk, ek] = setup(rng);
  MeterGuard guard;

  for (std::uint32_t n : {1u, 5u, 15u, 20u}) {
    CAPTURE(n);
    const policy::Policy pol = widest(n);
    REQUIRE(pol.leaves().size() == n);
    const auto gamma = widest_attrs(n);

    Meter::reset();
    auto dk = keygen(mk, gamma, rng);
    REQUIRE(dk.ok());
    // 1 for the anchor + 2 per attribute (each pair component is one ladder).
    CHECK(Meter::total() == MeterCounts{2 * n + 1, 0, 0});

    Meter::reset();
    const G1 m = algebra::random_g1(rng);
    CHECK(Meter::total() == MeterCounts{0, 1, 0});

    Meter::reset();
    const Ciphertext ct = encrypt(m, pol, ek, rng);
    CHECK(Meter::total() == MeterCounts{2 * n + 1, 1, 0});
    CHECK(Meter::labeled("encrypt.leaf-shares") == MeterCounts{2 * n, 0, 0});
    CHECK(Meter::labeled("encrypt.version-binding") == MeterCounts{1, 0, 0});
    CHECK(Meter::labeled("encrypt.blinding") == MeterCounts{0, 1, 0});

    // n-of-n uses every leaf: 2 pairings per leaf plus the version-bound
    // pairing; one recombination exponent per leaf plus the two divisions.
    Meter::reset();
    auto out = decrypt(ct, dk.value());
    REQUIRE(out.ok());
    CHECK(out.value() == m);
    CHECK(Meter::total() == MeterCounts{0, n + 2, 2 * n + 1});
  }

  // Update operations cost one exponentiation regardless of range length.
  std::vector<VersionedScalar> lifts;
  MasterKey mk2 = mk;
  for (int i = 0; i < 4; ++i) {
    auto [next, uk] = update_mk(mk2, rng);
    mk2 = next;
    lifts.push_back({uk.version, uk.u_dk});
  }
  auto dk = keygen(mk, attrs({"a"}), rng);
  REQUIRE(dk.ok());
  for (std::size_t take : {std::size_t{0}, std::size_t{1}, std::size_t{4}}) {
    CAPTURE(take);
    std::span<const VersionedScalar> range(lifts.data(), take);
    Meter::reset();
    auto lifted = update_dk_component(dk.value().d, 0, range);
    REQUIRE(lifted.ok());
    CHECK(Meter::total() == MeterCounts{1, 0, 0});
  }
  Meter::reset();
  auto [mk3, uk3] = update_mk(mk2, rng);
  CHECK(Meter::total() == MeterCounts{1, 0, 0});
}

TEST_CASE("decrypting a plain single-attribute policy skips recombination") {
  // The policy "a" is a bare leaf: no Lagrange step at all, so the count is
  // one lower than the one-leaf gate shape used in the cost profile above.
  CounterRng rng(9);
  auto [mk, ek] = setup(rng);
  auto dk = keygen(mk, attrs({"a"}), rng);
  REQUIRE(dk.ok());
  const G1 m = algebra::random_g1(rng);
  const Ciphertext ct = encrypt(m, parsed("a"), ek, rng);
  MeterGuard guard;
  CHECK(decrypt(ct, dk.value()).value() == m);
  CHECK(Meter::total() == MeterCounts{0, 2, 3});
}

TEST_CASE("all five artifact encodings roundtrip") {
  CounterRng rng(10);
  auto [mk, ek] = setup(rng);
  auto [mk1, uk1] = update_mk(mk, rng);
  auto dk = keygen(mk, attrs({"role:nurse", "ward-3"}), rng);
  REQUIRE(dk.ok());
  const G1 m = algebra::random_g1(rng);
  const Ciphertext ct = encrypt(m, parsed("role:nurse and ward-3"), ek, rng);

  {
    const Bytes b = encoded(mk);
    ByteReader r(b);
    auto back = deserialize_master_key(r);
    REQUIRE(back.ok());
    CHECK(r.done());
    CHECK(back.value() == mk);
  }
  {
    const Bytes b = encoded(ek);
    ByteReader r(b);
    auto back = deserialize_encryption_key(r);
    REQUIRE(back.ok());
    CHECK(r.done());
    CHECK(back.value() == ek);
  }
  {
    const Bytes b = encoded(dk.value());
    ByteReader r(b);
    auto back = deserialize_decryption_key(r);
    REQUIRE(back.ok());
    CHECK(r.done());
    CHECK(back.value() == dk.value());
    // The decoded key still functions.
    CHECK(decrypt(ct, back.value()).value() == m);
  }
  {
    const Bytes b = encoded(ct);
    ByteReader r(b);
    auto back = deserialize_ciphertext(r);
    REQUIRE(back.ok());
    CHECK(r.done());
    CHECK(back.value() == ct);
    CHECK(decrypt(back.value(), dk.value()).value() == m);
  }
  {
    const Bytes b = encoded(uk1);
    ByteReader r(b);
    auto back = deserialize_update_key(r);
    REQUIRE(back.ok());
    CHECK(r.done());
    CHECK(back.value() == uk1);
  }
}

TEST_CASE("decoders reject malformed bytes") {
  CounterRng rng(11);
  auto [mk, ek] = setup(rng);
  auto [mk1, uk1] = update_mk(mk, rng);
  auto dk = keygen(mk, attrs({"a", "b"}), rng);
  REQUIRE(dk.ok());
  const Ciphertext ct = encrypt(algebra::random_g1(rng), parsed("a and b"), ek, rng);

  SUBCASE("type tags are enforced") {
    const Bytes mk_bytes = encoded(mk);
    ByteReader r(mk_bytes);
    CHECK(deserialize_encryption_key(r).code() == Errc::decode_error);
    const Bytes ek_bytes = encoded(ek);
    ByteReader r2(ek_bytes);
    CHECK(deserialize_master_key(r2).code() == Errc::decode_error);
  }

  SUBCASE("truncation at any stage fails cleanly") {
    const Bytes full = encoded(ct);
    for (std::size_t keep : {std::size_t{0}, std::size_t{1}, std::size_t{9},
                             full.size() / 2, full.size() - 1}) {
      CAPTURE(keep);
      ByteReader r(std::span(full.data(), keep));
      CHECK(deserialize_ciphertext(r).code() == Errc::decode_error);
    }
    const Bytes key = encoded(dk.value());
    ByteReader r(std::span(key.data(), key.size() - 1));
    CHECK(deserialize_decryption_key(r).code() == Errc::decode_error);
  }

  SUBCASE("group elements must decode") {
    Bytes bytes = encoded(ek);
    bytes[10] |= 0x7f;  // drive h's x coordinate past the field modulus
    ByteReader r(bytes);
    CHECK(deserialize_encryption_key(r).code() == Errc::decode_error);
  }

  SUBCASE("master key epoch secret must be nonzero") {
    MasterKey broken = mk;
    broken.beta = Scalar{};
    const Bytes b = encoded(broken);
    ByteReader r(b);
    CHECK(deserialize_master_key(r).code() == Errc::decode_error);
  }

  SUBCASE("decryption key attributes must be sorted, unique, and valid") {
    DecryptionKey unsorted = dk.value();
    std::swap(unsorted.components[0], unsorted.components[1]);
    const Bytes b1 = encoded(unsorted);
    ByteReader r(b1);
    CHECK(deserialize_decryption_key(r).code() == Errc::decode_error);

    DecryptionKey dup = dk.value();
    dup.components[1].attribute = dup.components[0].attribute;
    const Bytes b2 = encoded(dup);
    ByteReader r2(b2);
    CHECK(deserialize_decryption_key(r2).code() == Errc::decode_error);

    DecryptionKey invalid = dk.value();
    invalid.components[0].attribute = "not ok";
    const Bytes b3 = encoded(invalid);
    ByteReader r3(b3);
    CHECK(deserialize_decryption_key(r3).code() == Errc::decode_error);

    DecryptionKey empty = dk.value();
    empty.components.clear();
    const Bytes b4 = encoded(empty);
    ByteReader r4(b4);
    CHECK(deserialize_decryption_key(r4).code() == Errc::decode_error);
  }

  SUBCASE("ciphertext leaves must mirror the policy") {
    Ciphertext swapped = ct;
    std::swap(swapped.leaves[0].index, swapped.leaves[1].index);
    const Bytes b1 = encoded(swapped);
    ByteReader r(b1);
    CHECK(deserialize_ciphertext(r).code() == Errc::decode_error);

    Ciphertext missing = ct;
    missing.leaves.pop_back();
    const Bytes b2 = encoded(missing);
    ByteReader r2(b2);
    CHECK(deserialize_ciphertext(r2).code() == Errc::decode_error);
  }

  SUBCASE("update key scalars must be reciprocal") {
    UpdateKey broken = uk1;
    broken.u_dk = broken.u_cp;  // beta ratios are never self-inverse here
    const Bytes b = encoded(broken);
    ByteReader r(b);
    CHECK(deserialize_update_key(r).code() == Errc::decode_error);
  }
}
