#include <doctest.h>

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "seabrew/algebra.hpp"
#include "test_util.hpp"

using namespace seabrew::algebra;
using testutil::from_hex;
using testutil::to_hex;

namespace {

Scalar scalar_from_hex(const std::string& hex) {
  auto bytes = from_hex(hex);
  auto s = Scalar::from_bytes(bytes);
  REQUIRE(s.has_value());
  return *s;
}

// r - 1, big-endian
const char* kOrderMinusOneHex = "8000000000000800000000000000000000000000";

}  // namespace

TEST_CASE("generator matches the frozen encoding and round-trips") {
  const G0 g = g0_generator();
  CHECK(!g.infinity);
  auto enc = g0_to_bytes(g);
  CHECK(to_hex(enc) ==
        "05220fb6df3382e449d91e13cfce9e58fd2bd21b3d6442fae1ea15821a6128cd5630"
        "5ed2894b0bfd3cf345d281153b3d7ce7f3db6c107a7972d31486d582b9f6");
  auto back = g0_from_bytes(enc);
  REQUIRE(back.has_value());
  CHECK(*back == g);
}

TEST_CASE("generator has the advertised prime order") {
  const G0 g = g0_generator();
  const Scalar r_minus_1 = scalar_from_hex(kOrderMinusOneHex);
  CHECK(g0_exp(g, r_minus_1) == g0_neg(g));                  // r*g = identity
  CHECK(g0_mul(g0_exp(g, r_minus_1), g) == g0_identity());
}

TEST_CASE("pairing of the generators matches the frozen vector") {
  const G1 e_gg = pairing(g0_generator(), g0_generator());
  CHECK(to_hex(g1_to_bytes(e_gg)) ==
        "05e0aad33ee1810aca7d333520645a5e4c249fb15e64ce5b26817a20a90385f55cb6"
        "8e0eb927dd9e54fb5123f209072dd28c3bbf0991a5af5968ac0bf0851620"
        "1ca56c04ffa3d6574bb63330be1406ac7870653e090fdbcc7e70b17d0eaa1fdf9a66"
        "8b0f44be11ea6336f9af5442005bd41898afb160ccf07291cc0d194c385b");
  CHECK(e_gg == group().pairing_of_generators);
  CHECK(!(e_gg == g1_identity()));  // non-degenerate
}

TEST_CASE("pairing is bilinear on fixed small multiples") {
  const G0 g = g0_generator();
  const G0 g3 = g0_exp(g, Scalar::from_u64(3));
  const G0 g5 = g0_exp(g, Scalar::from_u64(5));
  const G1 lhs = pairing(g3, g5);
  CHECK(to_hex(g1_to_bytes(lhs)) ==
        "2b507f82b4814865a052ad5c3b351173f3074872c5d3365adfa1e04ef2e0619f9620"
        "587aa9a20175d4d0911bc56be0f98e2f185ec51c1192dcd2c6153d1c4afb"
        "3f42fac4569f742ec1c797231a84b0faf785262fc4a43a2c312314ca351670463952"
        "8ef1ac013746a2c0b4a3db70df37d81dd5d4ea5828bb82b69098ee2b4ad3");
  CHECK(lhs == g1_exp(pairing(g, g), Scalar::from_u64(15)));
}

TEST_CASE("pairing is bilinear and symmetric on random inputs") {
  CounterRng rng(42);
  const G0 g = g0_generator();
  const G1 e_gg = pairing(g, g);
  for (int i = 0; i < 25; ++i) {
    const Scalar a = Scalar::random(rng);
    const Scalar b = Scalar::random(rng);
    const G0 ga = g0_exp(g, a);
    const G0 gb = g0_exp(g, b);
    const G1 lhs = pairing(ga, gb);
    CHECK(lhs == g1_exp(e_gg, a * b));
    CHECK(lhs == pairing(gb, ga));
  }
}

TEST_CASE("pairing with the identity is the unit value") {
  CHECK(pairing(g0_identity(), g0_generator()) == g1_identity());
  CHECK(pairing(g0_generator(), g0_identity()) == g1_identity());
}

TEST_CASE("pairing values live in the order-r subgroup") {
  const G1 e_gg = pairing(g0_generator(), g0_generator());
  const Scalar r_minus_1 = scalar_from_hex(kOrderMinusOneHex);
  CHECK(g1_mul(g1_exp(e_gg, r_minus_1), e_gg) == g1_identity());
}

TEST_CASE("group law consistency") {
  CounterRng rng(7);
  const G0 g = g0_generator();
  const Scalar a = Scalar::random(rng);
  const Scalar b = Scalar::random(rng);
  const G0 ga = g0_exp(g, a);
  const G0 gb = g0_exp(g, b);
  CHECK(g0_mul(ga, gb) == g0_exp(g, a + b));
  CHECK(g0_mul(ga, g0_identity()) == ga);
  CHECK(g0_mul(g0_identity(), ga) == ga);
  CHECK(g0_mul(ga, g0_neg(ga)) == g0_identity());
  CHECK(g0_mul(ga, ga) == g0_exp(g, a + a));  // doubling through the add path
  CHECK(g0_exp(ga, Scalar()) == g0_identity());
  CHECK(g0_exp(g0_identity(), a) == g0_identity());
}

TEST_CASE("simultaneous double exponentiation agrees with the naive product") {
  CounterRng rng(11);
  const G0 g = g0_generator();
  for (int i = 0; i < 8; ++i) {
    const Scalar a = Scalar::random(rng);
    const Scalar b = Scalar::random(rng);
    const G0 p = g0_exp(g, Scalar::random_nonzero(rng));
    const G0 q = g0_exp(g, Scalar::random_nonzero(rng));
    CHECK(g0_double_exp(p, a, q, b) == g0_mul(g0_exp(p, a), g0_exp(q, b)));
  }
  const Scalar a = Scalar::random(rng);
  const Scalar b = Scalar::random(rng);
  CHECK(g0_double_exp(g0_identity(), a, g, b) == g0_exp(g, b));
  CHECK(g0_double_exp(g, a, g0_identity(), b) == g0_exp(g, a));
  CHECK(g0_double_exp(g, a, g0_neg(g), a) == g0_identity());
  CHECK(g0_double_exp(g, Scalar(), g, Scalar()) == g0_identity());
}

TEST_CASE("scalar field behaves like Z_r") {
  CounterRng rng(3);
  const Scalar a = Scalar::random(rng);
  const Scalar b = Scalar::random(rng);
  CHECK((a + b) - b == a);
  CHECK(a + a.neg() == Scalar());
  CHECK(a * Scalar::from_u64(1) == a);
  const Scalar ai = a.inverse().value();
  CHECK(a * ai == Scalar::from_u64(1));
  CHECK(!Scalar().inverse().has_value());
  CHECK(Scalar().is_zero());
  CHECK(!Scalar::from_u64(1).is_zero());
  // wrap-around: (r-1) + 1 == 0
  const Scalar r_minus_1 = scalar_from_hex(kOrderMinusOneHex);
  CHECK(r_minus_1 + Scalar::from_u64(1) == Scalar());
  CHECK(Scalar().neg() == Scalar());
}

TEST_CASE("scalar serialization is 20 canonical big-endian bytes") {
  CounterRng rng(5);
  const Scalar a = Scalar::random(rng);
  auto bytes = a.to_bytes();
  static_assert(sizeof(bytes) == kScalarBytes);
  auto back = Scalar::from_bytes(bytes);
  REQUIRE(back.has_value());
  CHECK(*back == a);
  // the order itself is not a canonical value
  CHECK(!Scalar::from_bytes(from_hex("8000000000000800000000000000000000000001"))
             .has_value());
  std::vector<std::uint8_t> short_buf(kScalarBytes - 1, 0);
  CHECK(!Scalar::from_bytes(short_buf).has_value());
  CHECK(Scalar::from_bytes(std::vector<std::uint8_t>(kScalarBytes, 0))->is_zero());
  CHECK(Scalar::from_u64(0x0102).to_bytes()[kScalarBytes - 1] == 0x02);
  CHECK(Scalar::from_u64(0x0102).to_bytes()[kScalarBytes - 2] == 0x01);
}

TEST_CASE("point encoding is 64 bytes with sign in the top bit") {
  CounterRng rng(9);
  for (int i = 0; i < 4; ++i) {
    const G0 p = g0_exp(g0_generator(), Scalar::random_nonzero(rng));
    auto enc = g0_to_bytes(p);
    static_assert(sizeof(enc) == kG0Bytes);
    auto back = g0_from_bytes(enc);
    REQUIRE(back.has_value());
    CHECK(*back == p);
    // the negation flips only the parity bit
    auto neg_enc = g0_to_bytes(g0_neg(p));
    CHECK((neg_enc[0] ^ enc[0]) == 0x80);
    for (std::size_t k = 1; k < enc.size(); ++k) CHECK(neg_enc[k] == enc[k]);
  }
  // identity is the all-zero string
  auto id_enc = g0_to_bytes(g0_identity());
  for (auto b : id_enc) CHECK(b == 0);
  auto id = g0_from_bytes(id_enc);
  REQUIRE(id.has_value());
  CHECK(id->infinity);
}

TEST_CASE("point decoding rejects malformed input") {
  std::vector<std::uint8_t> buf(kG0Bytes, 0);
  // x = 0 with the sign bit set: the only candidate would be the two-torsion
  // point (0, 0), which is not encodable
  buf[0] = 0x80;
  CHECK(!g0_from_bytes(buf).has_value());
  // x >= field size
  auto qbytes = from_hex(
      "40000000000004000000000000000000000000008000000000000000000000000000"
      "010000000000001000000000000000000000000001ffffffffffffffffff");
  std::vector<std::uint8_t> big(kG0Bytes, 0);
  std::copy(qbytes.begin(), qbytes.end(), big.end() - qbytes.size());
  CHECK(!g0_from_bytes(big).has_value());
  // wrong length
  CHECK(!g0_from_bytes(std::vector<std::uint8_t>(kG0Bytes - 1, 0)).has_value());
  CHECK(!g0_from_bytes(std::vector<std::uint8_t>(kG0Bytes + 1, 0)).has_value());
}

TEST_CASE("pairing-value encoding round-trips and validates") {
  CounterRng rng(13);
  const G1 v = random_g1(rng);
  auto enc = g1_to_bytes(v);
  static_assert(sizeof(enc) == kG1Bytes);
  auto back = g1_from_bytes(enc);
  REQUIRE(back.has_value());
  CHECK(*back == v);
  CHECK(!g1_from_bytes(std::vector<std::uint8_t>(kG1Bytes - 1, 0)).has_value());
  // coordinates must be canonical (< q)
  std::vector<std::uint8_t> bad(kG1Bytes, 0xff);
  CHECK(!g1_from_bytes(bad).has_value());
}

TEST_CASE("pairing-value group operations") {
  CounterRng rng(17);
  const G1 e_gg = pairing(g0_generator(), g0_generator());
  const Scalar a = Scalar::random(rng);
  const Scalar b = Scalar::random(rng);
  CHECK(g1_mul(g1_exp(e_gg, a), g1_exp(e_gg, b)) == g1_exp(e_gg, a + b));
  const G1 x = g1_exp(e_gg, a);
  CHECK(g1_mul(x, g1_inverse(x)) == g1_identity());
  CHECK(g1_mul(x, g1_identity()) == x);
  CHECK(g1_exp(x, Scalar()) == g1_identity());
  // division expressed as multiply-by-inverse recovers the numerator
  const G1 y = g1_exp(e_gg, b);
  CHECK(g1_mul(g1_mul(x, y), g1_inverse(y)) == x);
}

TEST_CASE("attribute hashing matches the frozen vectors") {
  const std::pair<const char*, const char*> vectors[] = {
      {"temperature",
       "8dc1bcff14ad7fcc7bf2b6e335bbba419eea2485d9fbb4981404df654a7ad032bc67"
       "9d9e0ef1d844f8c0f3e8eeb8be9fa0e8ed69129f7779530acbb809b9eda6"},
      {"humidity",
       "1dc56c4609fcd45e57de1a1de9b6483ee9520363c5514443d81ee1a6b7e58c1e204e"
       "0823f85d8272567e7fb2e4c62f2701921e4b2efd0c66834d41bbbba20382"},
      {"attr:unit:42",
       "b7285c14ffe2d768d9782d2ac9a5bccf5238f5845078e58dbb3cfa677bea1b16221d"
       "fd6d6124d1952cc139659b1d1bfead29292378db3bae2c3366f10fbe586a"},
      {"a",
       "06586ff43cfb9af881635dffb7b918b7b4e94b633dd270a16dc5418937129871048e"
       "4737c7074913c33f16714a5393c39c54a8111f2a51b2854c9586fc2d93c0"},
      {"b",
       "867cae2e5b9c740ba5532eace2ca12ca1dbd26b02f9604512d0ab42fc90407fa9642"
       "7612ae58a8558b379d6ee8b57686be4b8a188965fe5945fc2278a509603a"},
  };
  for (auto& [label, expect] : vectors) {
    CHECK(to_hex(g0_to_bytes(hash_to_g0(std::string_view(label)))) == expect);
  }
}

TEST_CASE("hashed points land in the order-r subgroup") {
  const G0 p = hash_to_g0(std::string_view("membership-check"));
  CHECK(!p.infinity);
  const Scalar r_minus_1 = scalar_from_hex(kOrderMinusOneHex);
  CHECK(g0_mul(g0_exp(p, r_minus_1), p) == g0_identity());
  // distinct labels give distinct points
  CHECK(!(hash_to_g0(std::string_view("a")) == hash_to_g0(std::string_view("b"))));
  // memoized lookups are stable
  CHECK(hash_to_g0(std::string_view("membership-check")) == p);
}

TEST_CASE("deterministic RNG streams are reproducible and independent") {
  CounterRng a(123), b(123), c(124);
  std::array<std::uint8_t, 48> ba{}, bb{}, bc{};
  a.fill(ba);
  b.fill(bb);
  c.fill(bc);
  CHECK(ba == bb);
  CHECK(ba != bc);
  CounterRng parent(99);
  CounterRng s1(parent, "left"), s2(parent, "right"), s1again(parent, "left");
  CHECK(s1.next_u64() == s1again.next_u64());
  CounterRng s2b(parent, "right");
  CHECK(s2.next_u64() == s2b.next_u64());
  CounterRng l(parent, "left"), r(parent, "right");
  CHECK(l.next_u64() != r.next_u64());
  for (int i = 0; i < 100; ++i) {
    double u = l.next_unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  // scalar sampling from a fixed stream is reproducible
  CounterRng u1(2024), u2(2024);
  CHECK(Scalar::random(u1) == Scalar::random(u2));
}

TEST_CASE("meter counts exponentiations by kind and label") {
  Meter::set_enabled(true);
  Meter::reset();
  const G0 g = g0_generator();
  CounterRng rng(1);
  const Scalar a = Scalar::random(rng);

  g0_exp(g, a);
  CHECK(Meter::total().g0_exps == 1);
  g0_double_exp(g, a, g, a);  // one ladder, one count
  CHECK(Meter::total().g0_exps == 2);
  g0_mul(g, g);  // group multiplication is free
  g0_neg(g);
  CHECK(Meter::total().g0_exps == 2);

  const G1 e_gg = pairing(g, g);
  CHECK(Meter::total().pairings == 1);
  g1_exp(e_gg, a);
  CHECK(Meter::total().g1_exps == 1);
  g1_inverse(e_gg);  // division costs one exponentiation
  CHECK(Meter::total().g1_exps == 2);
  g1_mul(e_gg, e_gg);  // multiplication is free
  CHECK(Meter::total().g1_exps == 2);
  random_g1(rng);
  CHECK(Meter::total().g1_exps == 3);

  Meter::reset();
  {
    Meter::Scope outer("outer");
    g0_exp(g, a);
    {
      Meter::Scope inner("inner");
      g0_exp(g, a);
      g0_exp(g, a);
    }
    g0_exp(g, a);
  }
  CHECK(Meter::labeled("outer").g0_exps == 2);
  CHECK(Meter::labeled("inner").g0_exps == 2);
  CHECK(Meter::labeled("").g0_exps == 0);
  CHECK(Meter::total().g0_exps == 4);

  Meter::reset();
  Meter::set_enabled(false);
  g0_exp(g, a);
  CHECK(Meter::total().g0_exps == 0);
}
