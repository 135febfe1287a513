#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace pmpir {

using Residue = std::uint64_t;

class FieldElement;
class Rng;

// The prime field F_q. Moduli are capped at 2^31 - 1 so that a product of two
// residues always fits in 64 bits.
class PrimeField {
 public:
  static constexpr Residue kMaxModulus = (Residue{1} << 31) - 1;

  explicit PrimeField(Residue q);

  Residue modulus() const noexcept { return q_; }

  FieldElement element(std::int64_t value) const;
  FieldElement zero() const;
  FieldElement one() const;

  // Raw residue arithmetic. Inputs must already be canonical.
  Residue add(Residue a, Residue b) const noexcept {
    Residue s = a + b;
    return s >= q_ ? s - q_ : s;
  }
  Residue sub(Residue a, Residue b) const noexcept {
    return a >= b ? a - b : a + q_ - b;
  }
  Residue neg(Residue a) const noexcept { return a == 0 ? 0 : q_ - a; }
  Residue mul(Residue a, Residue b) const noexcept { return (a * b) % q_; }
  Residue pow(Residue base, std::uint64_t exp) const noexcept;
  // Throws ArithmeticError for a == 0.
  Residue inv(Residue a) const;
  Residue reduce(std::int64_t value) const noexcept;

  // Uniform residue in [0, q) by rejection sampling over 64-bit words.
  Residue sample(Rng& rng) const;

  friend bool operator==(const PrimeField& a, const PrimeField& b) noexcept {
    return a.q_ == b.q_;
  }

 private:
  friend class FieldElement;
  struct Trusted {};
  // For moduli that were validated when the owning element was built.
  PrimeField(Trusted, Residue q) noexcept : q_(q) {}

  Residue q_;
};

// A canonical residue tagged with its modulus. Mixing moduli throws
// FieldMismatch.
class FieldElement {
 public:
  FieldElement(Residue value, const PrimeField& field);

  Residue value() const noexcept { return value_; }
  Residue modulus() const noexcept { return q_; }
  PrimeField field() const noexcept { return PrimeField(PrimeField::Trusted{}, q_); }
  bool is_zero() const noexcept { return value_ == 0; }

  FieldElement inv() const;
  FieldElement pow(std::uint64_t exp) const;

  FieldElement& operator+=(const FieldElement& o);
  FieldElement& operator-=(const FieldElement& o);
  FieldElement& operator*=(const FieldElement& o);
  FieldElement& operator/=(const FieldElement& o);
  FieldElement operator-() const;

  friend FieldElement operator+(FieldElement a, const FieldElement& b) { return a += b; }
  friend FieldElement operator-(FieldElement a, const FieldElement& b) { return a -= b; }
  friend FieldElement operator*(FieldElement a, const FieldElement& b) { return a *= b; }
  friend FieldElement operator/(FieldElement a, const FieldElement& b) { return a /= b; }
  friend bool operator==(const FieldElement& a, const FieldElement& b) noexcept {
    return a.q_ == b.q_ && a.value_ == b.value_;
  }

 private:
  // Trusted constructor for already-reduced values.
  struct Raw {};
  FieldElement(Raw, Residue value, Residue q) : value_(value), q_(q) {}
  void check_same(const FieldElement& o) const;

  Residue value_;
  Residue q_;
};

FieldElement add(const FieldElement& a, const FieldElement& b);
FieldElement mul(const FieldElement& a, const FieldElement& b);
FieldElement inv(const FieldElement& a);

// Deterministic, seedable generator. The seed is kept so reports can echo it.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}
  std::uint64_t next() { return engine_(); }
  std::uint64_t seed() const noexcept { return seed_; }
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

FieldElement sample_uniform(Rng& rng, const PrimeField& field);

// splitmix64 step; used to derive independent per-trial seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept;

bool is_prime(std::uint64_t n) noexcept;
// Smallest prime strictly greater than n.
std::uint64_t next_prime_above(std::uint64_t n) noexcept;

}  // namespace pmpir
