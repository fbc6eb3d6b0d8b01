#include "doctest.h"

#include "glue/error.hpp"
#include "glue/param_algebra.hpp"
#include "glue/sampling.hpp"

using namespace glue;

namespace {

const Chain big({"p", "r1", "r2", "r3", "q"});
const Chain mid({"p", "r2", "q"});

ExactGlueParam exact(const Chain& c, std::vector<long long> v) {
  std::vector<Rational> r;
  for (auto x : v) r.emplace_back(x);
  return {c, r};
}

} // namespace

TEST_CASE("worked values") {
  const auto lambda = exact(big, {5, 6, 7});
  CHECK(restrict(lambda, mid) == exact(mid, {6}));
  CHECK(mask(lambda, mid) == exact(big, {5, 0, 7}));
  CHECK(extend(exact(mid, {8}), big) == exact(big, {0, 8, 0}));
  CHECK(add(lambda, exact(mid, {8})) == exact(big, {5, 14, 7}));
}

TEST_CASE("concatenation inserts a junction zero") {
  const auto a = exact(Chain({"p", "r1", "r2"}), {3});
  const auto b = exact(Chain({"r2", "r3", "q"}), {4});
  const auto c = concat_params(a, b);
  CHECK(c == exact(big, {3, 0, 4}));
  CHECK(zero_support_subchain(c) == mid);
  CHECK(zero_support_subchain(exact(big, {0, 0, 0})) == big);
  CHECK(zero_support_subchain(exact(big, {1, 2, 3})) == Chain({"p", "q"}));
}

TEST_CASE("shape and sign errors") {
  CHECK_THROWS_AS(exact(big, {1, 2}), InputError);
  CHECK_THROWS_AS(exact(big, {1, -2, 3}), InputError);
  CHECK_THROWS_AS(restrict(exact(mid, {1}), big), InputError);
  CHECK(GlueParam::zero(Chain({"p", "q"})).values.empty());
}

TEST_CASE("decomposition and round trips on random rationals") {
  Rng rng(11);
  const std::vector<std::string> ids{"p", "a", "b", "c", "d", "q"};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> sel{"p"};
    for (int i = 1; i < 5; ++i)
      if (rng.coin()) sel.push_back(ids[i]);
    sel.push_back("q");
    const Chain i1(sel);
    std::vector<std::string> sub{"p"};
    for (int i = 1; i <= i1.length(); ++i)
      if (rng.coin()) sub.push_back(i1[i]);
    sub.push_back("q");
    const Chain i2(sub);
    std::vector<Rational> v;
    for (int i = 0; i < i1.length(); ++i)
      v.emplace_back(static_cast<long long>(rng.below(50)), 1 + static_cast<long long>(rng.below(9)));
    const ExactGlueParam lambda(i1, v);
    // Lambda = Lambda(I1 - I2) + Lambda_{I1,I2} extended back.
    CHECK(add(mask(lambda, i2), restrict(lambda, i2)) == lambda);
    CHECK(restrict(extend(restrict(lambda, i2), i1), i2) == restrict(lambda, i2));
    CHECK(restrict(mask(lambda, i2), i2) == ExactGlueParam::zero(i2));
    CHECK(is_subchain(i2, zero_support_subchain(mask(lambda, i2))));
  }
}
