#pragma once

// Gluing parameters Lambda_I = (lambda_1, ..., lambda_|I|), one coordinate per
// interior point of a chain, and the restriction / masking / extension /
// concatenation / addition operations between chains.
//
// Templated on the scalar so identities can be checked in exact arithmetic
// (boost::rational) while the collar engine runs on doubles.

#include <cstddef>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "glue/chain_poset.hpp"
#include "glue/error.hpp"

namespace glue {

using Rational = boost::rational<long long>;

template <class T>
struct BasicGlueParam {
  Chain chain;
  std::vector<T> values; // values[i-1] is lambda_i for interior point r_i

  BasicGlueParam() = default;
  BasicGlueParam(Chain c, std::vector<T> v) : chain(std::move(c)), values(std::move(v)) {
    if (static_cast<int>(values.size()) != chain.length())
      throw InputError("parameter on " + chain.str() + " needs " +
                       std::to_string(chain.length()) + " coordinates, got " +
                       std::to_string(values.size()));
    for (const auto& v : values)
      if (v < T(0)) throw InputError("gluing parameters must be nonnegative");
  }

  static BasicGlueParam zero(const Chain& c) {
    return BasicGlueParam(c, std::vector<T>(c.length() > 0 ? c.length() : 0, T(0)));
  }

  friend bool operator==(const BasicGlueParam&, const BasicGlueParam&) = default;
};

using GlueParam = BasicGlueParam<double>;
using ExactGlueParam = BasicGlueParam<Rational>;

namespace detail {

// For each interior point of `sub`, its 1-based interior position in `chain`.
inline std::vector<int> interior_positions(const Chain& sub, const Chain& chain) {
  if (!is_subchain(sub, chain))
    throw InputError(sub.str() + " is not a subchain of " + chain.str());
  std::vector<int> pos;
  std::size_t j = 1;
  for (int i = 1; i <= chain.length() && static_cast<int>(j) <= sub.length(); ++i)
    if (chain[i] == sub[j]) {
      pos.push_back(i);
      ++j;
    }
  return pos;
}

} // namespace detail

/// Lambda_{I1,I2}: the coordinates of Lambda at the interior points of I2.
template <class T>
BasicGlueParam<T> restrict(const BasicGlueParam<T>& lambda, const Chain& sub) {
  std::vector<T> out;
  for (int i : detail::interior_positions(sub, lambda.chain)) out.push_back(lambda.values[i - 1]);
  return {sub, std::move(out)};
}

/// Lambda_{I1}(I1 - I2): zero at the interior points of I2, unchanged elsewhere.
template <class T>
BasicGlueParam<T> mask(const BasicGlueParam<T>& lambda, const Chain& sub) {
  BasicGlueParam<T> out = lambda;
  for (int i : detail::interior_positions(sub, lambda.chain)) out.values[i - 1] = T(0);
  return out;
}

/// Lambda_{I2,I1}: a parameter on I2 read as a parameter on the finer chain I1.
template <class T>
BasicGlueParam<T> extend(const BasicGlueParam<T>& lambda, const Chain& chain) {
  BasicGlueParam<T> out = BasicGlueParam<T>::zero(chain);
  const auto pos = detail::interior_positions(lambda.chain, chain);
  for (std::size_t k = 0; k < pos.size(); ++k) out.values[pos[k] - 1] = lambda.values[k];
  return out;
}

/// Lambda_{I1} . Lambda_{I2}: a zero is inserted at the junction point.
template <class T>
BasicGlueParam<T> concat_params(const BasicGlueParam<T>& first, const BasicGlueParam<T>& second) {
  Chain joined = concat_chains(first.chain, second.chain);
  std::vector<T> v = first.values;
  v.push_back(T(0));
  v.insert(v.end(), second.values.begin(), second.values.end());
  return {std::move(joined), std::move(v)};
}

/// Lambda_I + Lambda_{I_1} + ... : each part is extended to I and summed.
template <class T>
BasicGlueParam<T> add(const BasicGlueParam<T>& base, const std::vector<BasicGlueParam<T>>& parts) {
  BasicGlueParam<T> out = base;
  for (const auto& part : parts) {
    const auto e = extend(part, base.chain);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += e.values[i];
  }
  return out;
}

template <class T>
BasicGlueParam<T> add(const BasicGlueParam<T>& base, const BasicGlueParam<T>& part) {
  return add(base, std::vector<BasicGlueParam<T>>{part});
}

/// The subchain of head, tail, and the interior points where lambda_i == 0.
template <class T>
Chain zero_support_subchain(const BasicGlueParam<T>& lambda) {
  std::vector<std::string> ids{lambda.chain.head()};
  for (int i = 1; i <= lambda.chain.length(); ++i)
    if (lambda.values[i - 1] == T(0)) ids.push_back(lambda.chain[i]);
  ids.push_back(lambda.chain.tail());
  return Chain(std::move(ids));
}

} // namespace glue
