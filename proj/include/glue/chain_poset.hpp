#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace glue {

struct CriticalPoint {
  std::string id;
  std::optional<int> index; // Morse index, when known
};

/// A finite chain r_0 > r_1 > ... > r_{k+1}, stored by id. |I| = k.
class Chain {
public:
  Chain() = default;
  explicit Chain(std::vector<std::string> ids) : ids_(std::move(ids)) {}

  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }
  const std::string& head() const { return ids_.front(); }
  const std::string& tail() const { return ids_.back(); }
  const std::string& operator[](std::size_t i) const { return ids_[i]; }

  /// |I|: number of interior (break) points. The bare pair has length 0.
  int length() const { return static_cast<int>(ids_.size()) - 2; }

  /// Interior points r_1 .. r_{|I|}.
  std::vector<std::string> interior() const {
    if (ids_.size() < 2) return {};
    return {ids_.begin() + 1, ids_.end() - 1};
  }

  std::string str() const;

  friend bool operator==(const Chain&, const Chain&) = default;
  friend auto operator<=>(const Chain& a, const Chain& b) { return a.ids_ <=> b.ids_; }

private:
  std::vector<std::string> ids_;
};

/// The partially ordered set of critical points. The strict order is stored
/// transitively closed; construction rejects cycles.
class CriticalPoset {
public:
  CriticalPoset() = default;

  /// `succ` lists pairs (a, b) meaning a > b. The closure is taken.
  CriticalPoset(std::vector<CriticalPoint> points,
                const std::vector<std::pair<std::string, std::string>>& succ);

  /// Linear poset p0 > p1 > ... > p_n with ids "p0".."pn".
  static CriticalPoset linear(int n);

  std::size_t size() const { return points_.size(); }
  const std::vector<CriticalPoint>& points() const { return points_; }
  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  const CriticalPoint& point(const std::string& id) const;

  /// Strict order a > b.
  bool succ(const std::string& a, const std::string& b) const;

  /// Covering edges (a > b with nothing strictly between), lexicographic.
  std::vector<std::pair<std::string, std::string>> cover_edges() const;

  /// All ordered pairs (a, b) with a > b, lexicographic by id.
  std::vector<std::pair<std::string, std::string>> comparable_pairs() const;

private:
  std::size_t slot(const std::string& id) const;

  std::vector<CriticalPoint> points_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<bool>> gt_; // gt_[i][j] <=> points_[i] > points_[j]
};

/// True iff `seq` is strictly decreasing at each consecutive pair.
/// Throws InputError on an unknown id.
bool is_chain(const CriticalPoset& poset, const std::vector<std::string>& seq);

/// Validating constructor: throws InputError if `seq` is not a chain.
Chain make_chain(const CriticalPoset& poset, std::vector<std::string> seq);

inline int chain_length(const Chain& c) { return c.length(); }

/// J <= I: J is a subset of I with the same head and tail.
bool is_subchain(const Chain& sub, const Chain& chain);

/// I1 . I2, sharing the junction point once. Throws InputError if tail(I1) != head(I2).
Chain concat_chains(const Chain& first, const Chain& second);

/// Splits I at interior position `pos` (1-based) into the two chains meeting there.
std::pair<Chain, Chain> split_chain(const Chain& chain, int pos);

/// -1 if p is not above q, otherwise the maximal |I| over chains from p to q.
int pair_length(const CriticalPoset& poset, const std::string& p, const std::string& q);

/// Every chain with head p and tail q, in lexicographic order of id sequences.
std::vector<Chain> enumerate_chains(const CriticalPoset& poset, const std::string& p,
                                    const std::string& q);

/// Every subchain J <= I (2^{|I|} of them), in lexicographic order.
std::vector<Chain> subchains(const Chain& chain);

} // namespace glue
