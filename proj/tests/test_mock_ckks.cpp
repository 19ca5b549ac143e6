#include <algorithm>
#include <doctest.h>

#include <cmath>
#include <random>

#include "hssmlab/mock_ckks.hpp"
#include "oracles.hpp"

using namespace hssmlab;

namespace {

std::vector<double> fill(double v, std::size_t n = 8) { return std::vector<double>(n, v); }

Context ctx8(int depth = 8, double clip = 3.0) {
  SimParams p;
  p.depth_budget = depth;
  p.clip_bound = clip;
  return new_context(p);
}

// Walks a fresh ciphertext down to (level, degree) with identity products.
CtVector at(Context& c, int level, int degree, double v = 0.5) {
  CtVector x = c.encrypt(fill(v));
  while (x.level() > level) x = c.normalize_for_mult(c.mul_cp(x, 1.0));
  return degree == 2 ? c.mul_cp(x, 1.0) : x;
}

}  // namespace

TEST_CASE("context construction validates the profile") {
  Context c = ctx8();
  CHECK(c.ledger() == OpLedger{});
  CHECK_NOTHROW(new_context(SimParams::pipeline_profile()));
  SimParams bad;
  bad.depth_budget = 0;
  CHECK_THROWS_AS(new_context(bad), InvalidParams);
  bad = SimParams{};
  bad.slot_count = 6;
  CHECK_THROWS_AS(new_context(bad), InvalidParams);
  bad = SimParams{};
  bad.scale_bits = 61;
  CHECK_THROWS_AS(new_context(bad), InvalidParams);
  bad = SimParams{};
  bad.clip_bound = 0.0;
  CHECK_THROWS_AS(new_context(bad), InvalidParams);
}

TEST_CASE("ring dimension label is metadata only") {
  SimParams a;
  SimParams b;
  b.ring_dim_label = 65536;
  Context ca(a), cb(b);
  const auto x = ca.mul_cc(ca.encrypt(fill(0.3)), ca.encrypt(fill(0.7)));
  const auto y = cb.mul_cc(cb.encrypt(fill(0.3)), cb.encrypt(fill(0.7)));
  CHECK(std::equal(x.raw().begin(), x.raw().end(), y.raw().begin()));
  CHECK(x.level() == y.level());
}

TEST_CASE("encrypt quantizes to the grid and counts") {
  Context c = ctx8();
  std::vector<double> v{0.5, -0.25, 0.0, 1.0 / 3.0, 2.9, -2.9, 1e-17, 0.1};
  const CtVector x = c.encrypt(v);
  CHECK(x.level() == 8);
  CHECK(x.degree() == 1);
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(std::abs(x.slot(i) - v[i]) <= std::ldexp(1.0, -51));
    CHECK(std::ldexp(x.slot(i), 50) == std::round(std::ldexp(x.slot(i), 50)));
  }
  CHECK(c.ledger().encrypt_count == 1);
  CHECK(c.ledger().live_ciphertexts == 1);

  const CtVector z = c.encrypt(fill(0.0));
  for (std::size_t i = 0; i < 8; ++i) CHECK(z.slot(i) == 0.0);

  CHECK_THROWS_AS(c.encrypt(fill(10.0)), RangeViolation);
  CHECK_THROWS_AS(c.encrypt(fill(1.0, 4)), ShapeMismatch);
}

TEST_CASE("rounding is ties-to-even on the grid") {
  SimParams p;
  p.scale_bits = 20;
  Context c(p);
  const double ulp = std::ldexp(1.0, -20);
  const CtVector x = c.encrypt(std::vector<double>{0.5 * ulp, 1.5 * ulp, 2.5 * ulp, -0.5 * ulp,
                                                   -1.5 * ulp, 0, 0, 0});
  CHECK(x.raw()[0] == 0);
  CHECK(x.raw()[1] == 2);
  CHECK(x.raw()[2] == 2);
  CHECK(x.raw()[3] == 0);
  CHECK(x.raw()[4] == -2);
}

TEST_CASE("decrypt returns values and metadata unchanged") {
  Context c = ctx8();
  const std::vector<double> v{0.1, 0.2, 0.3, 0.4, -0.5, -0.6, 0.7, 0.8};
  const CtVector x = c.encrypt(v);
  const Decrypted d = c.decrypt(x);
  CHECK(d.level == 8);
  CHECK(d.degree == 1);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(d.values[i] - v[i]) <= std::ldexp(1.0, -51));
  CHECK(c.ledger().decrypt_count == 1);
}

TEST_CASE("normalize_for_mult applies the lazy rescale rule") {
  Context c = ctx8();
  const CtVector fresh = c.encrypt(fill(0.5));
  const CtVector d2 = c.mul_cp(fresh, 1.0);
  REQUIRE(d2.level() == 8);
  REQUIRE(d2.degree() == 2);
  const auto before = c.ledger().rescale;
  const CtVector n = c.normalize_for_mult(d2);
  CHECK(n.level() == 7);
  CHECK(n.degree() == 1);
  CHECK(c.ledger().rescale == before + 1);
  const CtVector same = c.normalize_for_mult(n);
  CHECK(same.level() == 7);
  CHECK(c.ledger().rescale == before + 1);
  const CtVector bottom = at(c, 0, 2);
  REQUIRE(bottom.level() == 0);
  CHECK_THROWS_AS(c.normalize_for_mult(bottom), LevelExhausted);
}

TEST_CASE("mul_cc aligns operands and clamps") {
  Context c = ctx8();
  const CtVector p = c.mul_cc(c.encrypt(fill(2.0)), c.encrypt(fill(1.5)));
  CHECK(p.level() == 8);
  CHECK(p.degree() == 2);
  CHECK(p.slot(0) == doctest::Approx(3.0));
  CHECK(c.ledger().mul_ct_ct == 1);

  const CtVector a = at(c, 7, 2);
  const CtVector b = c.encrypt(fill(0.5));
  const auto ls = c.ledger().level_switch;
  const CtVector r = c.mul_cc(a, b);
  CHECK(r.level() == 6);
  CHECK(r.degree() == 2);
  CHECK(c.ledger().level_switch == ls + 1);

  const auto clips = c.ledger().clip_events;
  const CtVector big = c.mul_cc(c.encrypt(fill(2.5)), c.encrypt(fill(2.5)));
  for (std::size_t i = 0; i < 8; ++i) CHECK(big.slot(i) <= 3.0);
  CHECK(c.ledger().clip_events == clips + 8);
}

TEST_CASE("mul_cp keeps the normalized level and raises degree") {
  Context c = ctx8();
  const CtVector x = c.mul_cp(c.encrypt(fill(0.5)), 0.9);
  CHECK(x.level() == 8);
  CHECK(x.degree() == 2);
  CHECK(x.slot(3) == doctest::Approx(0.45).epsilon(1e-14));
  const CtVector y = at(c, 5, 2);
  const CtVector z = c.mul_cp(y, PtVector(fill(1.0)));
  CHECK(z.level() == 4);
  CHECK(z.degree() == 2);
  CHECK(std::abs(z.slot(0) - y.slot(0)) <= std::ldexp(1.0, -50));
  CHECK_THROWS_AS(c.mul_cp(y, PtVector(fill(1.0, 4))), ShapeMismatch);
}

TEST_CASE("addition alignment") {
  Context c = ctx8();
  const CtVector a = at(c, 7, 2);
  const CtVector b = at(c, 6, 2);
  const CtVector s = c.add_cc(a, b);
  CHECK(s.level() == 6);
  CHECK(s.degree() == 2);

  const CtVector fresh = c.encrypt(fill(0.25));
  const CtVector d = at(c, 6, 2);
  const CtVector t = c.add_cc(fresh, d);
  CHECK(t.level() == 5);
  CHECK(t.degree() == 1);

  const CtVector u = c.add_cp(a, PtVector(fill(0.0)));
  CHECK(u.level() == a.level());
  CHECK(u.degree() == a.degree());
  CHECK(u.slot(0) == a.slot(0));

  const CtVector diff = c.sub_cc(fresh, fresh);
  CHECK(diff.slot(0) == 0.0);
}

TEST_CASE("rotation and slot sums") {
  Context c = ctx8();
  const CtVector x = c.encrypt(std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8});
  const CtVector r = c.rotate_slots(x, 1);
  CHECK(r.slot(0) == x.slot(1));
  CHECK(r.slot(7) == x.slot(0));
  CHECK(c.ledger().rotate == 1);
  CHECK_THROWS_AS(c.rotate_slots(x, 8), ShapeMismatch);

  const CtVector ones = c.encrypt(fill(0.25));
  const auto rot = c.ledger().rotate;
  const CtVector s = c.slot_sum(ones);
  CHECK(c.ledger().rotate == rot + 3);
  for (std::size_t i = 0; i < 8; ++i) CHECK(s.slot(i) == 2.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.35, 0.35);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(8);
    for (double& e : v) e = u(rng);
    const CtVector t = c.slot_sum(c.encrypt(v));
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(std::abs(t.slot(i) - oracle::sum(v)) <= 8 * std::ldexp(1.0, -50));
    }
  }
}

TEST_CASE("release tracks live and peak counts") {
  Context c = ctx8();
  const CtVector a = c.encrypt(fill(0.1));
  c.release(a);
  CHECK(c.ledger().live_ciphertexts == 0);
  CHECK(c.ledger().peak_live_ciphertexts == 1);
  CHECK_THROWS_AS(c.release(a), DoubleRelease);

  Context d = ctx8();
  const CtVector x = d.encrypt(fill(0.1));
  d.encrypt(fill(0.2));
  d.encrypt(fill(0.3));
  d.release(x);
  CHECK(d.ledger().live_ciphertexts == 2);
  CHECK(d.ledger().peak_live_ciphertexts == 3);
}

TEST_CASE("metadata stays in range and determinism holds") {
  const auto run = [] {
    Context c = ctx8();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> v(8);
    for (double& e : v) e = u(rng);
    CtVector x = c.encrypt(v);
    for (int i = 0; i < 7; ++i) {
      x = c.add_cp(c.mul_cc(x, x), 0.25);
      CHECK(x.level() >= 0);
      CHECK(x.level() <= 8);
      CHECK((x.degree() == 1 || x.degree() == 2));
    }
    return std::make_pair(std::vector<std::int64_t>(x.raw().begin(), x.raw().end()), c.ledger());
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("quantization error stays within the chain bound") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    Context c = ctx8();
    std::vector<double> v(8), w(8);
    for (double& e : v) e = u(rng);
    for (double& e : w) e = 0.5 * u(rng);
    CtVector x = c.encrypt(v);
    const CtVector y = c.encrypt(w);
    std::vector<double> exact = v;
    for (int step = 0; step < 7; ++step) {
      x = c.add_cc(c.mul_cc(x, y), c.mul_cp(x, 0.5));
      for (std::size_t i = 0; i < 8; ++i) exact[i] = exact[i] * w[i] + 0.5 * exact[i];
    }
    REQUIRE(c.ledger().clip_events == 0);
    for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(x.slot(i) - exact[i]) <= std::ldexp(1.0, -40));
  }
}

TEST_CASE("tighter clip never produces fewer clip events") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.9, 1.9);
  std::vector<double> a(8), b(8);
  for (double& e : a) e = u(rng);
  for (double& e : b) e = u(rng);
  const auto clips = [&](double bound) {
    Context c = ctx8(8, bound);
    std::vector<double> ca = a, cb = b;
    for (double& e : ca) e = std::clamp(e, -bound, bound);
    for (double& e : cb) e = std::clamp(e, -bound, bound);
    const CtVector x = c.encrypt(ca);
    const CtVector y = c.encrypt(cb);
    c.mul_cc(x, y);
    c.add_cc(x, y);
    c.add_cp(x, 1.5);
    return c.ledger().clip_events;
  };
  CHECK(clips(1.0) >= clips(2.0));
  CHECK(clips(2.0) >= clips(3.0));
  CHECK(clips(1.0) > 0);
}

TEST_CASE("ledgers merge by summation") {
  Context a = ctx8(), b = ctx8();
  a.mul_cc(a.encrypt(fill(0.1)), a.encrypt(fill(0.2)));
  b.add_cc(b.encrypt(fill(0.1)), b.encrypt(fill(0.2)));
  OpLedger total = a.ledger();
  total += b.ledger();
  CHECK(total.mul_ct_ct == 1);
  CHECK(total.add == 1);
  CHECK(total.encrypt_count == 4);
}
