#pragma once
// Bilinear group provider, 80-bit profile.
//
// Concrete backend: a supersingular curve y^2 = x^3 + x over F_q with
// q = h*r - 1 prime, 2^510 <= q < 2^511, embedding degree 2, and a symmetric
// pairing e: G0 x G0 -> G1 built from the reduced Tate pairing composed with
// the distortion map (x, y) -> (-x, i*y) into E(F_q^2), i^2 = -1.
//  - G0: order-r subgroup of E(F_q);      compressed encoding = 64 bytes
//  - G1: order-r subgroup of F_{q^2}^*;   encoding = 128 bytes
//  - Scalar: Z_r, r = 2^159 + 2^107 + 1;  encoding = 20 bytes big-endian
// The subgroup cofactor h = 2^351 + 2^73 has Hamming weight 2, which keeps the
// final exponentiation and cofactor multiplications cheap.
//
// All types below are immutable plain values (trivially copyable), safe to
// share between threads. The exponentiation meter is global and race-free.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace seabrew::algebra {

inline constexpr std::size_t kScalarBytes = 20;
inline constexpr std::size_t kG0Bytes = 64;
inline constexpr std::size_t kG1Bytes = 128;
inline constexpr int kSecurityBits = 80;

// ----------------------------------------------------------------------------
// randomness

class Rng {
 public:
  virtual ~Rng() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;
};

// Process CSPRNG (OpenSSL RAND_bytes).
class SystemRng final : public Rng {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

// Deterministic SHA-256 counter generator for reproducible vectors and
// simulations. Never use for real key material.
class CounterRng final : public Rng {
 public:
  explicit CounterRng(std::uint64_t seed);
  explicit CounterRng(std::span<const std::uint8_t> seed);
  // Derive an independent stream: state = H(parent seed || label).
  CounterRng(const CounterRng& parent, std::string_view label);
  void fill(std::span<std::uint8_t> out) override;
  // Convenience draws for simulation code.
  std::uint64_t next_u64();
  double next_unit();  // uniform in [0, 1)
 private:
  std::array<std::uint8_t, 32> key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint8_t, 32> block_{};
  std::size_t used_ = 32;
};

// ----------------------------------------------------------------------------
// scalar field Z_r

class Scalar {
 public:
  Scalar() : limbs_{} {}  // zero
  static Scalar from_u64(std::uint64_t v);
  static Scalar random(Rng& rng);           // uniform mod r (wide reduction)
  static Scalar random_nonzero(Rng& rng);
  // Exactly kScalarBytes big-endian, value < r required.
  static std::optional<Scalar> from_bytes(std::span<const std::uint8_t> b);
  std::array<std::uint8_t, kScalarBytes> to_bytes() const;

  Scalar operator+(const Scalar&) const;
  Scalar operator-(const Scalar&) const;
  Scalar operator*(const Scalar&) const;
  Scalar neg() const;
  std::optional<Scalar> inverse() const;  // nullopt for zero
  bool is_zero() const;
  bool operator==(const Scalar&) const = default;

  // Little-endian 64-bit limbs, canonical (value < r). Internal use.
  std::array<std::uint64_t, 3> limbs_;
};

// ----------------------------------------------------------------------------
// group elements

struct G0 {
  // Affine coordinates as little-endian limbs, canonical mod q; identity has
  // infinity=true and zeroed coordinates.
  std::array<std::uint64_t, 8> x{}, y{};
  bool infinity = true;
  bool operator==(const G0&) const = default;
};

struct G1 {
  // Element a + b*i of F_{q^2}, little-endian limbs, canonical mod q.
  std::array<std::uint64_t, 8> a{}, b{};
  bool operator==(const G1&) const = default;
};

struct GroupParams {
  G0 generator;        // deterministic derivation: smallest admissible x, cofactor-cleared
  G1 pairing_of_generators;  // e(g, g), cached
  int security_bits;
  std::string order_hex;  // r
  std::string field_hex;  // q
};
const GroupParams& group();  // the 80-bit profile singleton

// Group operations. Only *_exp / pairing / random_g1 / g1_inverse touch the
// meter; plain group multiplication and negation are not exponentiations.
G0 g0_identity();
G0 g0_generator();
G0 g0_mul(const G0&, const G0&);   // point addition in additive language
G0 g0_neg(const G0&);
G0 g0_exp(const G0& base, const Scalar& e);  // metered: 1 G0 exponentiation
// Simultaneous a^ea * b^eb via one shared ladder; metered as ONE exponentiation
// (standard multi-exponentiation accounting).
G0 g0_double_exp(const G0& a, const Scalar& ea, const G0& b, const Scalar& eb);

G1 g1_identity();
G1 g1_mul(const G1&, const G1&);
G1 g1_exp(const G1& base, const Scalar& e);  // metered: 1 G1 exponentiation
// Division helper: inversion is deliberately implemented as exponentiation by
// r-1 through the metered path, so every division costs exactly one metered G1
// exponentiation (generic-group accounting).
G1 g1_inverse(const G1&);
G1 random_g1(Rng& rng);  // e(g,g)^k for nonzero k; metered: 1 G1 exponentiation

// Pairing. Bilinear, non-degenerate, symmetric. Metered: 1 pairing.
G1 pairing(const G0&, const G0&);

// Hash to the order-r subgroup of G0; deterministic, domain-separated with tag
// "SEABREW-H-ATTR-v1", try-and-increment then cofactor multiplication.
// Results are memoized process-wide (the map is pure).
G0 hash_to_g0(std::span<const std::uint8_t> label);
G0 hash_to_g0(std::string_view label);

// Scalar helpers mirroring the operation names used throughout.
Scalar random_scalar(Rng& rng);
Scalar random_nonzero_scalar(Rng& rng);
std::optional<Scalar> scalar_inverse(const Scalar& s);
// Interpret big-endian bytes (any length) reduced mod r; used to map wide
// hash outputs onto the scalar field with negligible bias.
Scalar scalar_from_wide_bytes(std::span<const std::uint8_t> b);

// ----------------------------------------------------------------------------
// serialization

// G0: 64 bytes; bit 511 (top bit of first byte) = parity of y, remaining 511
// bits = x big-endian. The identity is the all-zero string. Decoding validates
// the curve equation (subgroup membership is not re-checked; every encoder in
// this library only emits subgroup elements).
std::array<std::uint8_t, kG0Bytes> g0_to_bytes(const G0&);
std::optional<G0> g0_from_bytes(std::span<const std::uint8_t> b);

// G1: 64-byte big-endian a || 64-byte big-endian b.
std::array<std::uint8_t, kG1Bytes> g1_to_bytes(const G1&);
std::optional<G1> g1_from_bytes(std::span<const std::uint8_t> b);

// ----------------------------------------------------------------------------
// exponentiation meter
//
// Global, explicitly enabled, race-free. Counts are additionally keyed by an
// optional thread-local scope label so callers can separate cost buckets
// (e.g. per-leaf work vs. version binding) without instrumenting callees.

struct MeterCounts {
  std::uint64_t g0_exps = 0;
  std::uint64_t g1_exps = 0;
  std::uint64_t pairings = 0;
  MeterCounts& operator+=(const MeterCounts& o) {
    g0_exps += o.g0_exps; g1_exps += o.g1_exps; pairings += o.pairings;
    return *this;
  }
  bool operator==(const MeterCounts&) const = default;
};

class Meter {
 public:
  static void set_enabled(bool on);
  static bool is_enabled();
  static void reset();
  static MeterCounts total();                      // sum over all labels
  static MeterCounts labeled(std::string_view l);  // one label ("" = unscoped)
  static std::vector<std::pair<std::string, MeterCounts>> by_label();

  // RAII scope label; nested scopes shadow (innermost wins).
  class Scope {
   public:
    explicit Scope(const char* label);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;
   private:
    const char* prev_;
  };

  // Internal bump points (called by the operations above).
  static void bump_g0_exp();
  static void bump_g1_exp();
  static void bump_pairing();
};

}  // namespace seabrew::algebra
