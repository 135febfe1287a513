#include <doctest.h>

#include <string>
#include <vector>

#include "pmpir/combinatorics.hpp"
#include "pmpir/error.hpp"
#include "pmpir/pmcode.hpp"

using namespace pmpir;

namespace {

Vec random_record(const PrimeField& f, std::size_t ell, Rng& rng) {
  Vec v;
  for (std::size_t i = 0; i < ell; ++i) v.push_back(sample_uniform(rng, f));
  return v;
}

std::vector<NodeShare> shares_of(const Mat& c, const std::vector<std::size_t>& nodes) {
  std::vector<NodeShare> out;
  for (auto i : nodes) out.push_back({i, c.row(i)});
  return out;
}

// Node x stores (1, x, ..., x^(rows-1)) * m, computed with plain integers.
std::vector<std::int64_t> direct_row(std::int64_t x, const std::vector<std::vector<std::int64_t>>& m,
                                     std::int64_t q) {
  std::vector<std::int64_t> out(m[0].size(), 0);
  std::int64_t power = 1;
  for (const auto& row : m) {
    for (std::size_t b = 0; b < row.size(); ++b) out[b] = (out[b] + power * row[b]) % q;
    power = power * x % q;
  }
  return out;
}

}  // namespace

TEST_CASE("parameter derivation at both extreme points") {
  const CodeParams msr = derive_params(CodeFamily::MSR, 3, std::nullopt, 10);
  CHECK(msr.str() == "(10,3,4,2,1,6)");
  CHECK(derive_params(CodeFamily::MSR, 3, std::nullopt, 8).str() == "(8,3,4,2,1,6)");
  CHECK(derive_params(CodeFamily::MSR, 4, std::nullopt, 10).str() == "(10,4,6,3,1,12)");
  CHECK(derive_params(CodeFamily::MBR, 2, 2, 6).str() == "(6,2,2,2,1,3)");
  CHECK(derive_params(CodeFamily::MBR, 2, 3, 7).str() == "(7,2,3,3,1,5)");
  CHECK(derive_params(CodeFamily::MBR, 3, 3, 9).str() == "(9,3,3,3,1,6)");
  for (const auto& p : {msr, derive_params(CodeFamily::MBR, 2, 3, 7)}) {
    std::size_t bound = 0;
    for (std::size_t i = 0; i < p.k; ++i) bound += std::min(p.alpha, (p.r - i) * p.beta);
    CHECK(storage_bound(p) == bound);
    CHECK(p.ell == bound);
  }
  CHECK_THROWS_AS(derive_params(CodeFamily::MSR, 1, std::nullopt, 5), InvalidParameters);
  CHECK_THROWS_AS(derive_params(CodeFamily::MSR, 3, std::nullopt, 4), InvalidParameters);
  CHECK_THROWS_AS(derive_params(CodeFamily::MBR, 3, std::nullopt, 6), InvalidParameters);
  CHECK_THROWS_AS(derive_params(CodeFamily::MBR, 3, 2, 6), InvalidParameters);
  CHECK(msr_point(6, 3, 4) == std::pair<std::size_t, std::size_t>{2, 1});
  CHECK(mbr_point(5, 2, 3) == std::pair<std::size_t, std::size_t>{3, 1});
  CHECK_THROWS_AS(msr_point(7, 3, 4), InvalidParameters);

  CodeParams bad = msr;
  bad.ell = 7;
  CHECK_THROWS_AS(bad.validate(), InvalidParameters);
}

TEST_CASE("default moduli") {
  CHECK(default_modulus(derive_params(CodeFamily::MSR, 3, std::nullopt, 10)) == 101);
  CHECK(default_modulus(derive_params(CodeFamily::MSR, 3, std::nullopt, 8)) == 67);
  CHECK(default_modulus(derive_params(CodeFamily::MBR, 2, 2, 6)) == 7);
}

TEST_CASE("the (10,3,4,2,1,6) encoding matrix over F_13") {
  const PrimeField f(13);
  const CodeParams p = derive_params(CodeFamily::MSR, 3, std::nullopt, 10);
  const EncodingMatrix enc = build_encoding_matrix(p, f);
  const Mat expect = Mat::from_rows(f, {{1, 1, 1, 1, 1, 1, 1, 1, 1, 1},
                                        {1, 2, 3, 4, 5, 6, 7, 8, 9, 10},
                                        {1, 4, 9, 3, 12, 10, 10, 12, 3, 9},
                                        {1, 8, 1, 12, 8, 8, 5, 5, 1, 12}})
                         .transpose();
  CHECK(enc.psi == expect);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(enc.lambda[i] == f.element(static_cast<std::int64_t>((i + 1) * (i + 1))));
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(enc.psi.at(i, 2 + j) == enc.lambda[i] * enc.phi.at(i, j));
    }
  }
  // 3^2 = 10^2, 4^2 = 9^2, ... mod 13: Lambda has repeated entries.
  CHECK_FALSE(enc.repair_capable);
  CHECK(enc.repair_note.find("Lambda-distinctness") != std::string::npos);

  const Mat c = encode_record(enc, make_vec(f, {1, 2, 3, 4, 5, 6}));
  CHECK(c.at(1, 0).value() == 9);
  CHECK(c.at(1, 1).value() == 11);
  const std::vector<std::vector<std::int64_t>> m{{1, 2}, {2, 3}, {4, 5}, {5, 6}};
  for (std::size_t i = 0; i < 10; ++i) {
    const auto row = direct_row(static_cast<std::int64_t>(i + 1), m, 13);
    CHECK(c.at(i, 0).value() == static_cast<Residue>(row[0]));
    CHECK(c.at(i, 1).value() == static_cast<Residue>(row[1]));
  }
}

TEST_CASE("MBR encoding against a direct computation") {
  const PrimeField f(101);
  const CodeParams p = derive_params(CodeFamily::MBR, 2, 3, 7);
  const EncodingMatrix enc = build_encoding_matrix(p, f);
  CHECK(enc.repair_capable);
  const Mat c = encode_record(enc, make_vec(f, {1, 2, 3, 4, 5}));
  // [[S1, S2], [S2^T, 0]] with S1 = [[1,2],[2,3]], S2 = [4; 5].
  const std::vector<std::vector<std::int64_t>> m{{1, 2, 4}, {2, 3, 5}, {4, 5, 0}};
  for (std::size_t i = 0; i < 7; ++i) {
    const auto row = direct_row(static_cast<std::int64_t>(i + 1), m, 101);
    for (std::size_t b = 0; b < 3; ++b) CHECK(c.at(i, b).value() == static_cast<Residue>(row[b]));
  }
}

TEST_CASE("message packing round-trips and has the required structure") {
  const PrimeField f(101);
  Rng rng(3);
  for (const auto& p : {derive_params(CodeFamily::MSR, 4, std::nullopt, 10),
                        derive_params(CodeFamily::MBR, 2, 3, 7), derive_params(CodeFamily::MBR, 3, 3, 9)}) {
    const Vec x = random_record(f, p.ell, rng);
    const MessageMatrix msg = pack_message(x, p);
    CHECK(unpack_message(msg, p) == x);
    if (p.family == CodeFamily::MSR) {
      CHECK(msg.m.block(0, 0, p.alpha, p.alpha).is_symmetric());
      CHECK(msg.m.block(p.alpha, 0, p.alpha, p.alpha).is_symmetric());
    } else {
      CHECK(msg.m.is_symmetric());
      CHECK(msg.m.block(p.k, p.k, p.r - p.k, p.r - p.k).is_zero());
    }
    CHECK_THROWS_AS(pack_message(Vec(x.begin(), x.end() - 1), p), InvalidParameters);
  }
  const CodeParams p = derive_params(CodeFamily::MBR, 2, 3, 7);
  MessageMatrix broken = pack_message(make_vec(f, {1, 2, 3, 4, 5}), p);
  broken.m.raw(2, 2) = 1;
  CHECK_THROWS_AS(unpack_message(broken, p), InvalidParameters);
}

TEST_CASE("generator matrix reproduces encode") {
  const PrimeField f(101);
  Rng rng(11);
  for (const auto& p : {derive_params(CodeFamily::MSR, 3, std::nullopt, 8), derive_params(CodeFamily::MBR, 2, 3, 7)}) {
    const EncodingMatrix enc = build_encoding_matrix(p, f);
    const Mat g = generator_matrix(enc);
    const Vec x = random_record(f, p.ell, rng);
    const Mat c = encode_record(enc, x);
    const Vec flat = mat_vec(g, x);
    for (std::size_t i = 0; i < p.n; ++i)
      for (std::size_t b = 0; b < p.alpha; ++b) CHECK(flat[i * p.alpha + b] == c.at(i, b));
  }
}

TEST_CASE("any k nodes recover the record when q is large enough") {
  const PrimeField f(101);
  Rng rng(17);
  for (const auto& p : {derive_params(CodeFamily::MSR, 3, std::nullopt, 10),
                        derive_params(CodeFamily::MBR, 2, 2, 6)}) {
    const EncodingMatrix enc = build_encoding_matrix(p, f);
    const Vec x = random_record(f, p.ell, rng);
    const Mat c = encode_record(enc, x);
    std::size_t subsets = 0;
    for_each_combination(p.n, p.k, [&](const std::vector<std::size_t>& nodes) {
      REQUIRE(recover(enc, shares_of(c, nodes)) == x);
      ++subsets;
      return true;
    });
    CHECK(subsets == binomial(p.n, p.k));
    // More than k shares also work; fewer do not.
    CHECK(recover(enc, shares_of(c, {0, 1, 3, 5})) == x);
    std::vector<std::size_t> few(p.k - 1);
    for (std::size_t i = 0; i < few.size(); ++i) few[i] = i;
    CHECK_THROWS_AS(recover(enc, shares_of(c, few)), RecoveryFailure);
  }
}

TEST_CASE("over F_13 exactly the k-subsets with distinct squares recover") {
  const PrimeField f(13);
  const CodeParams p = derive_params(CodeFamily::MSR, 3, std::nullopt, 10);
  const EncodingMatrix enc = build_encoding_matrix(p, f);
  Rng rng(23);
  const Vec x = random_record(f, p.ell, rng);
  const Mat c = encode_record(enc, x);
  std::size_t expected = 0, recovered = 0;
  for_each_combination(10, 3, [&](const std::vector<std::size_t>& nodes) {
    std::vector<std::size_t> sq;
    for (auto i : nodes) sq.push_back((i + 1) * (i + 1) % 13);
    const bool distinct = sq[0] != sq[1] && sq[0] != sq[2] && sq[1] != sq[2];
    expected += distinct;
    try {
      const Vec got = recover(enc, shares_of(c, nodes));
      REQUIRE(got == x);
      ++recovered;
      CHECK(distinct);
    } catch (const RecoveryFailure&) {
      CHECK_FALSE(distinct);
    }
    return true;
  });
  CHECK(recovered == expected);
  CHECK(recovered < 120);
  CHECK(recover(enc, shares_of(c, {0, 1, 2})) == x);
  CHECK(recover(enc, shares_of(c, {3, 4, 5})) == x);
}

TEST_CASE("corrupted shares are reported") {
  const PrimeField f(101);
  const EncodingMatrix enc = build_encoding_matrix(derive_params(CodeFamily::MSR, 3, std::nullopt, 10), f);
  const Mat c = encode_record(enc, make_vec(f, {1, 2, 3, 4, 5, 6}));
  auto shares = shares_of(c, {0, 1, 2, 3});
  shares[3].symbols[0] += f.one();
  CHECK_THROWS_AS(recover(enc, shares), RecoveryFailure);
  auto dup = shares_of(c, {0, 1, 1});
  CHECK_THROWS_AS(recover(enc, dup), RecoveryFailure);
}

TEST_CASE("exact repair from every helper set") {
  const PrimeField f(101);
  Rng rng(29);
  for (const auto& p : {derive_params(CodeFamily::MSR, 3, std::nullopt, 8), derive_params(CodeFamily::MBR, 2, 3, 7)}) {
    const EncodingMatrix enc = build_encoding_matrix(p, f);
    REQUIRE(enc.repair_capable);
    const Vec x = random_record(f, p.ell, rng);
    const Mat c = encode_record(enc, x);
    for (std::size_t failed = 0; failed < p.n; ++failed) {
      std::vector<std::size_t> others;
      for (std::size_t i = 0; i < p.n; ++i)
        if (i != failed) others.push_back(i);
      const Vec target = repair_target(enc, failed);
      for_each_combination(others.size(), p.r, [&](const std::vector<std::size_t>& pick) {
        std::vector<HelperSymbol> proj;
        for (auto j : pick) proj.push_back({others[j], repair_projection(c.row(others[j]), target)});
        REQUIRE(repair_reconstruct(enc, failed, proj) == c.row(failed));
        return true;
      });
    }
    std::vector<HelperSymbol> proj;
    for (std::size_t i = 1; i < p.r; ++i) proj.push_back({i, f.zero()});
    CHECK_THROWS_AS(repair_reconstruct(enc, 0, proj), InvalidParameters);
    proj.push_back({0, f.zero()});
    CHECK_THROWS_AS(repair_reconstruct(enc, 0, proj), InvalidParameters);
  }
  const EncodingMatrix weak = build_encoding_matrix(derive_params(CodeFamily::MSR, 3, std::nullopt, 10), PrimeField(13));
  std::vector<HelperSymbol> proj;
  for (std::size_t i = 1; i <= 4; ++i) proj.push_back({i, PrimeField(13).zero()});
  CHECK_THROWS_AS(repair_reconstruct(weak, 0, proj), RepairUnavailable);
}

TEST_CASE("encoding matrix checks and reconstruction from Psi") {
  const PrimeField f(101);
  const CodeParams p = derive_params(CodeFamily::MSR, 3, std::nullopt, 10);
  const EncodingMatrix enc = build_encoding_matrix(p, f);
  const EncodingMatrix again = encoding_from_psi(p, enc.psi);
  CHECK(again.phi == enc.phi);
  CHECK(again.lambda == enc.lambda);
  CHECK(again.xs == enc.xs);
  CHECK(again.repair_capable);

  CHECK_THROWS_AS(build_encoding_matrix(p, PrimeField(7)), InvalidParameters);
  Vec xs;
  for (int i = 1; i <= 10; ++i) xs.push_back(f.element(i == 10 ? 1 : i));
  CHECK_THROWS_AS(build_encoding_matrix(p, f, xs), InvalidParameters);
  Vec foreign;
  for (int i = 1; i <= 10; ++i) foreign.push_back(PrimeField(103).element(i));
  CHECK_THROWS_AS(build_encoding_matrix(p, f, foreign), FieldMismatch);

  Mat broken = enc.psi;
  broken.raw(4, 3) = f.add(broken.raw(4, 3), 1);  // no longer [Phi, Lambda Phi]
  CHECK_THROWS_AS(encoding_from_psi(p, broken), InvalidParameters);

  const CodeParams mbr = derive_params(CodeFamily::MBR, 2, 3, 7);
  const EncodingMatrix menc = build_encoding_matrix(mbr, f);
  Mat dependent = menc.psi;
  dependent.set_row(6, dependent.row(0));
  CHECK_THROWS_AS(encoding_from_psi(mbr, dependent), InvalidParameters);
}
