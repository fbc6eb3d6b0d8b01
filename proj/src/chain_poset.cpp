#include "glue/chain_poset.hpp"

#include <algorithm>
#include <functional>

#include "glue/error.hpp"

namespace glue {

std::string Chain::str() const {
  std::string out = "{";
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (i) out += ",";
    out += ids_[i];
  }
  return out + "}";
}

CriticalPoset::CriticalPoset(std::vector<CriticalPoint> points,
                             const std::vector<std::pair<std::string, std::string>>& succ)
    : points_(std::move(points)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!index_.emplace(points_[i].id, i).second)
      throw InputError("duplicate critical point id '" + points_[i].id + "'");
  }
  const std::size_t n = points_.size();
  gt_.assign(n, std::vector<bool>(n, false));
  for (const auto& [a, b] : succ) {
    if (!contains(a) || !contains(b))
      throw InputError("order edge references unknown id: " + a + " > " + b);
    gt_[slot(a)][slot(b)] = true;
  }
  // Warshall closure.
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (gt_[i][k])
        for (std::size_t j = 0; j < n; ++j)
          if (gt_[k][j]) gt_[i][j] = true;
  for (std::size_t i = 0; i < n; ++i)
    if (gt_[i][i]) throw InputError("order relation has a cycle through '" + points_[i].id + "'");
}

CriticalPoset CriticalPoset::linear(int n) {
  std::vector<CriticalPoint> pts;
  std::vector<std::pair<std::string, std::string>> edges;
  for (int i = 0; i <= n; ++i) {
    pts.push_back({"p" + std::to_string(i), std::nullopt});
    if (i > 0) edges.emplace_back("p" + std::to_string(i - 1), "p" + std::to_string(i));
  }
  return CriticalPoset(std::move(pts), edges);
}

std::size_t CriticalPoset::slot(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw InputError("unknown critical point id '" + id + "'");
  return it->second;
}

const CriticalPoint& CriticalPoset::point(const std::string& id) const { return points_[slot(id)]; }

bool CriticalPoset::succ(const std::string& a, const std::string& b) const {
  return gt_[slot(a)][slot(b)];
}

std::vector<std::pair<std::string, std::string>> CriticalPoset::comparable_pairs() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < points_.size(); ++i)
    for (std::size_t j = 0; j < points_.size(); ++j)
      if (gt_[i][j]) out.emplace_back(points_[i].id, points_[j].id);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<std::string, std::string>> CriticalPoset::cover_edges() const {
  std::vector<std::pair<std::string, std::string>> out;
  const std::size_t n = points_.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (!gt_[i][j]) continue;
      bool covered = true;
      for (std::size_t k = 0; k < n && covered; ++k)
        if (gt_[i][k] && gt_[k][j]) covered = false;
      if (covered) out.emplace_back(points_[i].id, points_[j].id);
    }
  std::sort(out.begin(), out.end());
  return out;
}

bool is_chain(const CriticalPoset& poset, const std::vector<std::string>& seq) {
  for (const auto& id : seq)
    if (!poset.contains(id)) throw InputError("unknown critical point id '" + id + "'");
  if (seq.size() < 2) return false;
  for (std::size_t i = 0; i + 1 < seq.size(); ++i)
    if (!poset.succ(seq[i], seq[i + 1])) return false;
  return true;
}

Chain make_chain(const CriticalPoset& poset, std::vector<std::string> seq) {
  if (!is_chain(poset, seq)) {
    Chain bad(std::move(seq));
    throw InputError("not a critical sequence: " + bad.str());
  }
  return Chain(std::move(seq));
}

bool is_subchain(const Chain& sub, const Chain& chain) {
  if (sub.size() < 2 || chain.size() < 2) return false;
  if (sub.head() != chain.head() || sub.tail() != chain.tail()) return false;
  // Both are strictly ordered, so a subset test is an in-order subsequence test.
  std::size_t j = 0;
  for (std::size_t i = 0; i < chain.size() && j < sub.size(); ++i)
    if (chain[i] == sub[j]) ++j;
  return j == sub.size();
}

Chain concat_chains(const Chain& first, const Chain& second) {
  if (first.size() < 2 || second.size() < 2 || first.tail() != second.head())
    throw InputError("cannot concatenate " + first.str() + " and " + second.str());
  std::vector<std::string> ids = first.ids();
  ids.insert(ids.end(), second.ids().begin() + 1, second.ids().end());
  return Chain(std::move(ids));
}

std::pair<Chain, Chain> split_chain(const Chain& chain, int pos) {
  if (pos < 1 || pos > chain.length())
    throw InputError("split position " + std::to_string(pos) + " outside " + chain.str());
  const auto& ids = chain.ids();
  return {Chain({ids.begin(), ids.begin() + pos + 1}), Chain({ids.begin() + pos, ids.end()})};
}

std::vector<Chain> enumerate_chains(const CriticalPoset& poset, const std::string& p,
                                    const std::string& q) {
  std::vector<Chain> out;
  if (!poset.succ(p, q)) return out;
  std::vector<std::string> ids;
  for (const auto& pt : poset.points()) ids.push_back(pt.id);
  std::sort(ids.begin(), ids.end());

  std::vector<std::string> path{p};
  std::function<void(const std::string&)> walk = [&](const std::string& cur) {
    if (poset.succ(cur, q)) {
      path.push_back(q);
      out.emplace_back(path);
      path.pop_back();
    }
    for (const auto& next : ids) {
      if (next == q) continue;
      if (poset.succ(cur, next) && poset.succ(next, q)) {
        path.push_back(next);
        walk(next);
        path.pop_back();
      }
    }
  };
  walk(p);
  std::sort(out.begin(), out.end());
  return out;
}

int pair_length(const CriticalPoset& poset, const std::string& p, const std::string& q) {
  if (!poset.succ(p, q)) return -1;
  // Longest path in the DAG of strict relations between p and q.
  std::vector<std::string> mids;
  for (const auto& pt : poset.points())
    if (poset.succ(p, pt.id) && poset.succ(pt.id, q)) mids.push_back(pt.id);
  std::unordered_map<std::string, int> memo;
  std::function<int(const std::string&)> longest = [&](const std::string& cur) -> int {
    // number of interior points on the longest chain from cur to q
    if (auto it = memo.find(cur); it != memo.end()) return it->second;
    int best = 0;
    for (const auto& m : mids)
      if (poset.succ(cur, m)) best = std::max(best, 1 + longest(m));
    return memo[cur] = best;
  };
  return longest(p);
}

std::vector<Chain> subchains(const Chain& chain) {
  const int k = chain.length();
  std::vector<Chain> out;
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    std::vector<std::string> ids{chain.head()};
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) ids.push_back(chain[i + 1]);
    ids.push_back(chain.tail());
    out.emplace_back(std::move(ids));
  }
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace glue
