#include "glue/family_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <set>
#include <sstream>

#include "glue/error.hpp"
#include "glue/sampling.hpp"

namespace glue {

namespace {

Vec concat(const Vec& a, const Vec& b) {
  Vec out(a.size() + b.size());
  out << a, b;
  return out;
}

std::string fmt_point(const Point& x) {
  std::ostringstream os;
  os << "chart " << x.chart << " (";
  for (int i = 0; i < x.coords.size(); ++i) os << (i ? ", " : "") << x.coords[i];
  os << ")";
  return os.str();
}

std::string pair_name(const std::string& p, const std::string& q) { return "(" + p + "," + q + ")"; }

} // namespace

ProductEmbedding ProductEmbedding::from_affine(std::vector<AffinePiece> pieces) {
  ProductEmbedding e;
  e.affine = pieces;
  e.map = [pieces](const Point& a, const Point& b) -> Point {
    for (const auto& pc : pieces)
      if (pc.left_chart == a.chart && pc.right_chart == b.chart)
        return {pc.target_chart, pc.offset + pc.matrix * concat(a.coords, b.coords)};
    throw InputError("no embedding piece for charts " + std::to_string(a.chart) + "," +
                     std::to_string(b.chart));
  };
  e.differential = [pieces](const Point& a, const Point& b) -> Mat {
    for (const auto& pc : pieces)
      if (pc.left_chart == a.chart && pc.right_chart == b.chart) return pc.matrix;
    throw InputError("no embedding piece for the given charts");
  };
  return e;
}

const CorneredSpace& StratifiedFamily::space(const std::string& p, const std::string& q) const {
  auto it = spaces.find({p, q});
  if (it == spaces.end()) throw InputError("no space attached to pair " + pair_name(p, q));
  return it->second;
}

const ProductEmbedding& StratifiedFamily::embedding(const std::string& p, const std::string& r,
                                                    const std::string& q) const {
  auto it = embeddings.find({p, r, q});
  if (it == embeddings.end())
    throw InputError("no product embedding for triple (" + p + "," + r + "," + q + ")");
  return it->second;
}

std::vector<PairKey> StratifiedFamily::pairs_by_length() const {
  std::vector<std::pair<int, PairKey>> keyed;
  for (const auto& [key, sp] : spaces) keyed.push_back({pair_length(poset, key.first, key.second), key});
  std::sort(keyed.begin(), keyed.end());
  std::vector<PairKey> out;
  for (auto& [len, key] : keyed) out.push_back(key);
  return out;
}

Chain StratifiedFamily::classify(const std::string& p, const std::string& q, const Point& x) const {
  const auto& sp = space(p, q);
  std::vector<std::string> labels;
  for (const auto& f : sp.active_facets(x)) labels.push_back(facet_label(sp, f));
  for (const auto& l : labels)
    if (!poset.contains(l) || !poset.succ(p, l) || !poset.succ(l, q))
      throw InputError("face label '" + l + "' of " + pair_name(p, q) +
                       " is not a point strictly between them");
  std::sort(labels.begin(), labels.end(), [&](const std::string& a, const std::string& b) {
    return poset.succ(a, b);
  });
  std::vector<std::string> ids{p};
  ids.insert(ids.end(), labels.begin(), labels.end());
  ids.push_back(q);
  if (!is_chain(poset, ids)) throw InputError("active faces at a point are not a chain");
  return Chain(std::move(ids));
}

Point StratifiedFamily::include(const Chain& chain, const std::vector<Point>& pieces) const {
  if (static_cast<int>(pieces.size()) != chain.length() + 1)
    throw InputError("stratum point of " + chain.str() + " needs " +
                     std::to_string(chain.length() + 1) + " pieces");
  Point acc = pieces[0];
  for (int i = 1; i <= chain.length(); ++i)
    acc = embedding(chain.head(), chain[i], chain[i + 1]).map(acc, pieces[i]);
  return acc;
}

std::optional<std::pair<Point, Point>> StratifiedFamily::split(const std::string& p,
                                                               const std::string& r,
                                                               const std::string& q,
                                                               const Point& y) const {
  const auto& e = embedding(p, r, q);
  if (e.inverse) return e.inverse(y);
  const auto& left = space(p, r);
  const auto& right = space(r, q);
  const auto& target = space(p, q);
  const int da = left.dim();
  const int db = right.dim();
  const double tol = 1e-11;

  if (e.affine) {
    for (const auto& pc : *e.affine) {
      if (pc.target_chart != y.chart) continue;
      Vec z = pc.matrix.colPivHouseholderQr().solve(Vec(y.coords - pc.offset));
      Point a{pc.left_chart, z.head(da)};
      Point b{pc.right_chart, z.tail(db)};
      if (!left.contains(a, tol) || !right.contains(b, tol)) continue;
      if ((pc.offset + pc.matrix * z - y.coords).norm() > tol) continue;
      return std::make_pair(a, b);
    }
    return std::nullopt;
  }

  // Gauss-Newton from the chart centres of every chart combination.
  for (int ca = 0; ca < static_cast<int>(left.charts().size()); ++ca)
    for (int cb = 0; cb < static_cast<int>(right.charts().size()); ++cb) {
      Vec z(da + db);
      for (int i = 0; i < da; ++i) {
        const auto& iv = left.chart(ca).box[i];
        z[i] = 0.5 * (iv.lo + iv.hi);
      }
      for (int i = 0; i < db; ++i) {
        const auto& iv = right.chart(cb).box[i];
        z[da + i] = 0.5 * (iv.lo + iv.hi);
      }
      for (int it = 0; it < 60; ++it) {
        Point a{ca, z.head(da)}, b{cb, z.tail(db)};
        Point img = e.map(a, b);
        if (img.chart != y.chart) break;
        Vec res = img.coords - y.coords;
        if (res.norm() < 1e-14) break;
        Mat d = e.differential(a, b);
        Vec step = d.colPivHouseholderQr().solve(res);
        z -= step;
        if (step.norm() < 1e-16) break;
      }
      Point a{ca, z.head(da)}, b{cb, z.tail(db)};
      if (!left.contains(a, tol) || !right.contains(b, tol)) continue;
      Point img = e.map(a, b);
      if (img.chart == y.chart && target.distance(img, y) < 1e-10) return std::make_pair(a, b);
    }
  return std::nullopt;
}

StratifiedFamily cube_family(int n) {
  if (n < 1 || n > 5) throw InputError("cube_family needs 1 <= n <= 5, got " + std::to_string(n));
  StratifiedFamily fam;
  fam.name = "cube" + std::to_string(n);
  fam.poset = CriticalPoset::linear(n);
  auto id = [](int i) { return "p" + std::to_string(i); };
  for (int i = 0; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) {
      const int d = j - i - 1;
      std::vector<Interval> box(d);
      for (int k = 0; k < d; ++k) box[k] = Interval{0.0, 1.0, true, false, id(i + 1 + k), ""};
      fam.spaces[{id(i), id(j)}] =
          CorneredSpace(d, d, {CornerChart::affine(box, Vec::Zero(d), Mat::Identity(d, d))});
    }
  for (int i = 0; i <= n; ++i)
    for (int m = i + 1; m <= n; ++m)
      for (int j = m + 1; j <= n; ++j) {
        const int da = m - i - 1, db = j - m - 1, d = j - i - 1;
        AffinePiece pc;
        pc.matrix = Mat::Zero(d, da + db);
        for (int k = 0; k < da; ++k) pc.matrix(k, k) = 1.0;
        for (int k = 0; k < db; ++k) pc.matrix(da + 1 + k, da + k) = 1.0;
        pc.offset = Vec::Zero(d);
        fam.embeddings[{id(i), id(m), id(j)}] = ProductEmbedding::from_affine({pc});
      }
  return fam;
}

StratifiedFamily single_pair_family(CorneredSpace space) {
  StratifiedFamily fam;
  fam.name = "single";
  fam.poset = CriticalPoset({{"p", std::nullopt}, {"q", std::nullopt}}, {{"p", "q"}});
  fam.spaces[{"p", "q"}] = std::move(space);
  return fam;
}

void mutate_flip(StratifiedFamily& family, const std::string& p, const std::string& r,
                 const std::string& q) {
  const ProductEmbedding original = family.embedding(p, r, q);
  const int d = family.space(p, q).dim();
  if (d < 2) throw InputError("coordinate flip needs a target of dimension >= 2");
  Mat swap = Mat::Identity(d, d);
  swap(0, 0) = swap(1, 1) = 0.0;
  swap(0, 1) = swap(1, 0) = 1.0;
  if (original.affine) {
    auto pieces = *original.affine;
    for (auto& pc : pieces) {
      pc.matrix = swap * pc.matrix;
      pc.offset = swap * pc.offset;
    }
    family.embeddings[{p, r, q}] = ProductEmbedding::from_affine(std::move(pieces));
    return;
  }
  ProductEmbedding e;
  e.map = [original, swap](const Point& a, const Point& b) {
    Point y = original.map(a, b);
    y.coords = swap * y.coords;
    return y;
  };
  e.differential = [original, swap](const Point& a, const Point& b) -> Mat {
    return swap * original.differential(a, b);
  };
  family.embeddings[{p, r, q}] = std::move(e);
}

void warp_embedding(StratifiedFamily& family, const std::string& p, const std::string& r,
                    const std::string& q, double s) {
  const ProductEmbedding original = family.embedding(p, r, q);
  const int da = family.space(p, r).dim();
  const int db = family.space(r, q).dim();
  auto warp = [s](Vec v) {
    for (int i = 0; i < v.size(); ++i) v[i] = v[i] * (1.0 + s * (1.0 - v[i]));
    return v;
  };
  auto unwarp = [s](Vec w) {
    // inverse of v (1 + s (1 - v)) = w on [0,1): s v^2 - (1+s) v + w = 0
    for (int i = 0; i < w.size(); ++i)
      if (s != 0.0)
        w[i] = 2.0 * w[i] / ((1.0 + s) + std::sqrt((1.0 + s) * (1.0 + s) - 4.0 * s * w[i]));
    return w;
  };
  ProductEmbedding e;
  e.map = [original, warp](const Point& a, const Point& b) {
    return original.map(a, Point{b.chart, warp(b.coords)});
  };
  e.differential = [original, warp, s, da, db](const Point& a, const Point& b) -> Mat {
    Mat inner = Mat::Identity(da + db, da + db);
    for (int i = 0; i < db; ++i) inner(da + i, da + i) = 1.0 + s - 2.0 * s * b.coords[i];
    return original.differential(a, Point{b.chart, warp(b.coords)}) * inner;
  };
  const std::string pp = p, rr = r, qq = q;
  // The inverse undoes the warp after splitting through the original embedding.
  auto base = std::make_shared<StratifiedFamily>();
  base->poset = family.poset;
  base->spaces = family.spaces;
  base->embeddings[{p, r, q}] = original;
  e.inverse = [base, pp, rr, qq, unwarp](const Point& y) -> std::optional<std::pair<Point, Point>> {
    auto ab = base->split(pp, rr, qq, y);
    if (!ab) return std::nullopt;
    ab->second.coords = unwarp(ab->second.coords);
    return ab;
  };
  family.embeddings[{p, r, q}] = std::move(e);
}

const ConditionResult* ValidationReport::first_failure() const {
  for (const auto& c : conditions)
    if (!c.passed) return &c;
  return nullptr;
}

namespace {

std::vector<Point> sample_space(const CorneredSpace& sp, int count, Rng& rng, bool interior) {
  std::vector<Point> out;
  const int nc = static_cast<int>(sp.charts().size());
  for (int s = 0; s < count; ++s) {
    const int c = static_cast<int>(rng.below(nc));
    const auto& ch = sp.chart(c);
    Vec u(ch.dim());
    for (int i = 0; i < ch.dim(); ++i) {
      const auto& iv = ch.box[i];
      const double roll = rng.uniform();
      if (!interior && roll < 0.25 && iv.lo_closed) u[i] = iv.lo;
      else if (!interior && roll < 0.35 && iv.hi_closed) u[i] = iv.hi;
      else u[i] = rng.open_uniform(iv.lo, iv.hi);
    }
    out.push_back({c, u});
  }
  return out;
}

} // namespace

ValidationReport validate_family(const StratifiedFamily& family, int samples, std::uint64_t seed,
                                 double tol) {
  ValidationReport rep;
  Rng rng(seed);
  auto record = [&](ConditionResult c) {
    if (!c.passed) rep.ok = false;
    rep.conditions.push_back(std::move(c));
  };

  for (const auto& [p, q] : family.poset.comparable_pairs()) {
    if (!family.spaces.count({p, q})) {
      record({"space_present", pair_name(p, q), 0, 0.0, false, "missing space"});
    }
  }

  for (const auto& [key, sp] : family.spaces) {
    const auto& [p, q] = key;
    const std::string where = pair_name(p, q);
    if (!family.poset.contains(p) || !family.poset.contains(q) || !family.poset.succ(p, q)) {
      record({"space_present", where, 0, 0.0, false, "space attached to a non-comparable pair"});
      continue;
    }
    SamplingConfig cfg;
    cfg.seed = seed;
    cfg.tol = tol;
    auto faces_ok = check_manifold_with_faces(sp, cfg);
    record({"manifold_with_faces", where, faces_ok.samples, 0.0, faces_ok.ok,
            faces_ok.witness ? fmt_point(*faces_ok.witness) + ": " + faces_ok.message : ""});

    // Partition: every sampled point has a chain stratum of length equal to its depth.
    ConditionResult part{"partition", where, 0, 0.0, true, ""};
    std::set<Chain> seen;
    for (int c = 0; c < static_cast<int>(sp.charts().size()); ++c)
      for (const auto& x : sample_chart(sp, c, cfg)) {
        ++part.samples;
        try {
          Chain ch = family.classify(p, q, x);
          seen.insert(ch);
          if (ch.length() != depth(sp, x)) {
            part.passed = false;
            part.witness = fmt_point(x) + ": depth differs from chain length";
          }
        } catch (const InputError& err) {
          part.passed = false;
          part.witness = fmt_point(x) + ": " + err.what();
        }
        if (!part.passed) break;
      }
    record(part);

    // Every chain between p and q has a nonempty stratum.
    ConditionResult strata{"strata_nonempty", where, 0, 0.0, true, ""};
    for (const auto& ch : enumerate_chains(family.poset, p, q)) {
      ++strata.samples;
      try {
        std::vector<Point> pieces;
        Rng local(seed + strata.samples);
        for (int i = 0; i <= ch.length(); ++i)
          pieces.push_back(sample_space(family.space(ch[i], ch[i + 1]), 1, local, true).front());
        Point y = family.include(ch, pieces);
        if (!sp.contains(y, tol) || family.classify(p, q, y) != ch) {
          strata.passed = false;
          strata.witness = "image of " + ch.str() + " lands in the wrong stratum";
        }
      } catch (const std::exception& err) {
        strata.passed = false;
        strata.witness = ch.str() + ": " + err.what();
      }
      if (!strata.passed) break;
    }
    record(strata);
  }

  // Embedding conditions per triple.
  for (const auto& [p, q] : family.poset.comparable_pairs())
    for (const auto& pt : family.poset.points()) {
      const std::string& r = pt.id;
      if (!family.poset.succ(p, r) || !family.poset.succ(r, q)) continue;
      const std::string where = "(" + p + "," + r + "," + q + ")";
      if (!family.spaces.count({p, r}) || !family.spaces.count({r, q}) || !family.spaces.count({p, q}))
        continue;
      if (!family.embeddings.count({p, r, q})) {
        record({"embedding_present", where, 0, 0.0, false, "missing product embedding"});
        continue;
      }
      const auto& e = family.embedding(p, r, q);
      const auto& target = family.space(p, q);
      const auto& left = family.space(p, r);
      const auto& right = family.space(r, q);
      ConditionResult face{"embedding_face", where, 0, 0.0, true, ""};
      ConditionResult rank{"embedding_rank", where, 0, 0.0, true, ""};
      ConditionResult inj{"embedding_injective", where, 0, 0.0, true, ""};
      std::vector<std::pair<Point, Point>> inputs;
      std::vector<Point> images;
      const auto as = sample_space(left, samples, rng, false);
      const auto bs = sample_space(right, samples, rng, false);
      double min_sv = std::numeric_limits<double>::infinity();
      for (int s = 0; s < samples; ++s) {
        const Point& a = as[s];
        const Point& b = bs[s];
        ++face.samples;
        Point y;
        try {
          y = e.map(a, b);
        } catch (const std::exception& err) {
          face.passed = false;
          face.witness = err.what();
          break;
        }
        std::string why;
        if (!target.contains(y, tol)) {
          why = "image outside Mbar" + pair_name(p, q);
        } else {
          try {
            Chain expect = concat_chains(family.classify(p, r, a), family.classify(r, q, b));
            Chain got = family.classify(p, q, y);
            if (expect != got) why = "image lies in stratum " + got.str() + ", expected " + expect.str();
          } catch (const InputError& err) {
            why = err.what();
          }
        }
        if (!why.empty() && face.passed) {
          face.passed = false;
          face.witness = fmt_point(a) + " x " + fmt_point(b) + " -> " + fmt_point(y) + ": " + why;
        }
        if (left.dim() + right.dim() > 0) {
          Eigen::JacobiSVD<Mat> svd(e.differential(a, b));
          const double sv = svd.singularValues().minCoeff();
          min_sv = std::min(min_sv, sv);
          ++rank.samples;
          if (sv <= 1e-9 && rank.passed) {
            rank.passed = false;
            rank.witness = fmt_point(a) + " x " + fmt_point(b);
          }
        }
        if (s < 200) {
          inputs.emplace_back(a, b);
          images.push_back(y);
        }
      }
      rank.max_residual = std::isfinite(min_sv) ? min_sv : 0.0;
      for (std::size_t i = 0; i < images.size() && inj.passed; ++i)
        for (std::size_t j = i + 1; j < images.size(); ++j) {
          ++inj.samples;
          const double din = left.distance(inputs[i].first, inputs[j].first) +
                             right.distance(inputs[i].second, inputs[j].second) +
                             (inputs[i].first.chart != inputs[j].first.chart ||
                                      inputs[i].second.chart != inputs[j].second.chart
                                  ? 1.0
                                  : 0.0);
          const bool same_out =
              images[i].chart == images[j].chart && target.distance(images[i], images[j]) <= 1e-12;
          if (din > 1e-12 && same_out) {
            inj.passed = false;
            inj.witness = "distinct inputs share the image " + fmt_point(images[i]);
            break;
          }
        }
      record(face);
      record(rank);
      record(inj);
    }

  // Coherence on triple products p > s > r > q.
  const auto& pts = family.poset.points();
  for (const auto& [p, q] : family.poset.comparable_pairs())
    for (const auto& s_pt : pts)
      for (const auto& r_pt : pts) {
        const std::string& s = s_pt.id;
        const std::string& r = r_pt.id;
        if (!(family.poset.succ(p, s) && family.poset.succ(s, r) && family.poset.succ(r, q))) continue;
        const std::string where = "(" + p + "," + s + "," + r + "," + q + ")";
        ConditionResult coh{"embedding_coherence", where, 0, 0.0, true, ""};
        try {
          const auto as = sample_space(family.space(p, s), samples, rng, false);
          const auto bs = sample_space(family.space(s, r), samples, rng, false);
          const auto cs = sample_space(family.space(r, q), samples, rng, false);
          const auto& target = family.space(p, q);
          for (int k = 0; k < samples; ++k) {
            ++coh.samples;
            Point left_first = family.embedding(p, r, q).map(
                family.embedding(p, s, r).map(as[k], bs[k]), cs[k]);
            Point right_first = family.embedding(p, s, q).map(
                as[k], family.embedding(s, r, q).map(bs[k], cs[k]));
            const double d = left_first.chart == right_first.chart
                                 ? target.distance(left_first, right_first)
                                 : std::numeric_limits<double>::infinity();
            coh.max_residual = std::max(coh.max_residual, d);
            if (!(d <= tol) && coh.passed) {
              coh.passed = false;
              coh.witness = fmt_point(as[k]) + " x " + fmt_point(bs[k]) + " x " + fmt_point(cs[k]) +
                            ": " + fmt_point(left_first) + " vs " + fmt_point(right_first);
            }
          }
        } catch (const std::exception& err) {
          coh.passed = false;
          coh.witness = err.what();
        }
        record(coh);
      }
  return rep;
}

} // namespace glue
