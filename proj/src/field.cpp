#include "pmpir/field.hpp"

#include <limits>

#include "pmpir/error.hpp"

namespace pmpir {

bool is_prime(std::uint64_t n) noexcept {
  if (n < 2) return false;
  if (n < 4) return true;
  if (n % 2 == 0 || n % 3 == 0) return false;
  for (std::uint64_t d = 5; d * d <= n; d += 6) {
    if (n % d == 0 || n % (d + 2) == 0) return false;
  }
  return true;
}

std::uint64_t next_prime_above(std::uint64_t n) noexcept {
  std::uint64_t c = n + 1;
  while (!is_prime(c)) ++c;
  return c;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw InvalidParameters("Rng::below: bound must be positive");
  // Reject the top partial block so every residue is equally likely.
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - (max % bound + 1) % bound;
  std::uint64_t x;
  do {
    x = next();
  } while (x > limit);
  return x % bound;
}

PrimeField::PrimeField(Residue q) : q_(q) {
  if (q > kMaxModulus) {
    throw InvalidParameters("modulus " + std::to_string(q) +
                            " exceeds 2^31-1");
  }
  if (!is_prime(q)) {
    throw InvalidParameters("modulus " + std::to_string(q) + " is not prime");
  }
}

FieldElement PrimeField::element(std::int64_t value) const {
  return FieldElement(reduce(value), *this);
}

FieldElement PrimeField::zero() const { return FieldElement(0, *this); }
FieldElement PrimeField::one() const { return FieldElement(1, *this); }

Residue PrimeField::reduce(std::int64_t value) const noexcept {
  const auto q = static_cast<std::int64_t>(q_);
  std::int64_t r = value % q;
  if (r < 0) r += q;
  return static_cast<Residue>(r);
}

Residue PrimeField::pow(Residue base, std::uint64_t exp) const noexcept {
  Residue result = 1 % q_;
  base %= q_;
  while (exp > 0) {
    if (exp & 1U) result = mul(result, base);
    base = mul(base, base);
    exp >>= 1U;
  }
  return result;
}

Residue PrimeField::inv(Residue a) const {
  if (a % q_ == 0) throw ArithmeticError("inversion of zero");
  // Extended Euclid on signed 64-bit values; q < 2^31 so nothing overflows.
  std::int64_t t = 0, new_t = 1;
  std::int64_t r = static_cast<std::int64_t>(q_);
  std::int64_t new_r = static_cast<std::int64_t>(a % q_);
  while (new_r != 0) {
    const std::int64_t quotient = r / new_r;
    std::int64_t tmp = t - quotient * new_t;
    t = new_t;
    new_t = tmp;
    tmp = r - quotient * new_r;
    r = new_r;
    new_r = tmp;
  }
  return reduce(t);
}

Residue PrimeField::sample(Rng& rng) const { return rng.below(q_); }

FieldElement::FieldElement(Residue value, const PrimeField& field)
    : value_(value % field.modulus()), q_(field.modulus()) {}

void FieldElement::check_same(const FieldElement& o) const {
  if (q_ != o.q_) {
    throw FieldMismatch("field elements from different moduli (" +
                        std::to_string(q_) + " vs " + std::to_string(o.q_) +
                        ")");
  }
}

FieldElement& FieldElement::operator+=(const FieldElement& o) {
  check_same(o);
  value_ += o.value_;
  if (value_ >= q_) value_ -= q_;
  return *this;
}

FieldElement& FieldElement::operator-=(const FieldElement& o) {
  check_same(o);
  value_ = value_ >= o.value_ ? value_ - o.value_ : value_ + q_ - o.value_;
  return *this;
}

FieldElement& FieldElement::operator*=(const FieldElement& o) {
  check_same(o);
  value_ = (value_ * o.value_) % q_;
  return *this;
}

FieldElement& FieldElement::operator/=(const FieldElement& o) {
  check_same(o);
  return *this *= o.inv();
}

FieldElement FieldElement::operator-() const {
  return FieldElement(Raw{}, value_ == 0 ? 0 : q_ - value_, q_);
}

FieldElement FieldElement::inv() const {
  return FieldElement(Raw{}, field().inv(value_), q_);
}

FieldElement FieldElement::pow(std::uint64_t exp) const {
  return FieldElement(Raw{}, field().pow(value_, exp), q_);
}

FieldElement add(const FieldElement& a, const FieldElement& b) { return a + b; }
FieldElement mul(const FieldElement& a, const FieldElement& b) { return a * b; }
FieldElement inv(const FieldElement& a) { return a.inv(); }

FieldElement sample_uniform(Rng& rng, const PrimeField& field) {
  return FieldElement(field.sample(rng), field);
}

}  // namespace pmpir
