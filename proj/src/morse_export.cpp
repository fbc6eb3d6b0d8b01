#include <set>

#include "glue/error.hpp"
#include "glue/morse_engine.hpp"

namespace glue {

namespace {

// k-th point of a 0-dimensional space, placed at k on the line.
CornerChart point_chart(int k) {
  Vec origin(1);
  origin << k;
  return CornerChart::affine({}, origin, Mat::Zero(1, 0));
}

// Arc k as [0, length] at height k in the plane, ends labelled by the via points.
CornerChart arc_chart(int k, double length, const std::string& lo, const std::string& hi) {
  Vec origin(2);
  origin << 0.0, k;
  Mat linear(2, 1);
  linear << 1.0, 0.0;
  return CornerChart::affine({Interval{0.0, length, true, true, lo, hi}}, origin, linear);
}

} // namespace

StratifiedFamily export_family(MorseModel& model) {
  StratifiedFamily fam;
  fam.name = model.system().name;
  std::vector<CriticalPoint> points;
  for (const auto& c : model.critical_points()) {
    if (!c.morse) throw InputError("export: critical point " + c.id + " is degenerate (not Morse)");
    points.push_back({c.id, c.index});
  }
  const auto pairs = model.connected_pairs();
  fam.poset = CriticalPoset(points, pairs);

  for (const auto& [p, q] : fam.poset.comparable_pairs()) {
    const int dim = model.critical(p).index - model.critical(q).index - 1;
    if (dim >= 2)
      throw Unsupported("export: M(" + p + "," + q + ") has dimension " + std::to_string(dim) + "; only 0 and 1 are supported");
    if (dim == 0) {
      const auto& m = model.moduli(p, q);
      if (!m.unresolved.empty())
        throw InputError("export: M(" + p + "," + q + ") has " + std::to_string(m.unresolved.size()) +
                         " unresolved shooting brackets, first near " + std::to_string(m.unresolved[0].lo));
      if (m.trajectories.empty()) throw InputError("export: M(" + p + "," + q + ") is empty although " + p + " > " + q);
      std::vector<CornerChart> charts;
      for (int k = 0; k < static_cast<int>(m.trajectories.size()); ++k) charts.push_back(point_chart(k));
      fam.spaces[{p, q}] = CorneredSpace(0, 1, std::move(charts));
      continue;
    }
    if (dim != 1) throw InputError("export: M(" + p + "," + q + ") has negative dimension but is nonempty");
    const auto& arcs = model.detect_broken(p, q);
    if (arcs.empty()) throw InputError("export: M(" + p + "," + q + ") is empty although " + p + " > " + q);
    if (arcs.size() == 1 && arcs[0].circle) {
      fam.spaces[{p, q}] = CorneredSpace::circle();
      continue;
    }
    std::vector<CornerChart> charts;
    std::map<std::string, std::vector<AffinePiece>> pieces;
    std::set<std::tuple<std::string, int, int>> seen;
    for (int k = 0; k < static_cast<int>(arcs.size()); ++k) {
      const auto& arc = arcs[k];
      if (arc.ends.size() != 2) throw InputError("export: arc " + std::to_string(k) + " of M(" + p + "," + q + ") lacks an end");
      charts.push_back(arc_chart(k, arc.length, arc.ends[0].via, arc.ends[1].via));
      for (int s = 0; s < 2; ++s) {
        const auto& e = arc.ends[s];
        if (e.first < 0 || e.second < 0)
          throw InputError("export: unresolved end of arc " + std::to_string(k) + " of M(" + p + "," + q + ") at " + e.via);
        if (!seen.insert({e.via, e.first, e.second}).second)
          throw InputError("export: broken pair (" + e.via + " #" + std::to_string(e.first) + ", #" +
                           std::to_string(e.second) + ") ends two arcs of M(" + p + "," + q + ")");
        AffinePiece pc;
        pc.left_chart = e.first;
        pc.right_chart = e.second;
        pc.target_chart = k;
        pc.matrix = Mat::Zero(1, 0);
        pc.offset = Vec::Constant(1, s == 0 ? 0.0 : arc.length);
        pieces[e.via].push_back(pc);
      }
    }
    fam.spaces[{p, q}] = CorneredSpace(1, 2, std::move(charts));
    for (const auto& r : fam.poset.points()) {
      if (!fam.poset.succ(p, r.id) || !fam.poset.succ(r.id, q)) continue;
      const auto n1 = model.moduli(p, r.id).trajectories.size();
      const auto n2 = model.moduli(r.id, q).trajectories.size();
      if (pieces[r.id].size() != n1 * n2)
        throw InputError("export: " + std::to_string(n1 * n2 - pieces[r.id].size()) + " broken pairs through " + r.id +
                         " match no end of M(" + p + "," + q + ")");
      fam.embeddings[{p, r.id, q}] = ProductEmbedding::from_affine(std::move(pieces[r.id]));
    }
  }
  return fam;
}

} // namespace glue
