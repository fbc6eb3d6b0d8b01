#include "glue/family_io.hpp"

#include <cctype>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "glue/error.hpp"

namespace glue {

using json = nlohmann::ordered_json;

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s.empty()) throw InputError("empty number");
  // strtod is correctly rounded; from_chars for double is not available everywhere
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || std::isspace(static_cast<unsigned char>(s[0])))
    throw InputError("not a decimal number: '" + s + "'");
  if (errno == ERANGE && std::abs(v) > 1.0) throw InputError("number out of range: '" + s + "'");
  return v;
}

namespace {

// Decoding with the JSON path carried along for messages.
struct Node {
  const json& j;
  std::string path;

  Node at(const std::string& key) const {
    if (!j.is_object() || !j.contains(key)) throw InputError(path + ": missing '" + key + "'");
    return {j.at(key), path + "." + key};
  }
  std::optional<Node> find(const std::string& key) const {
    if (!j.is_object() || !j.contains(key)) return std::nullopt;
    return Node{j.at(key), path + "." + key};
  }
  Node at(std::size_t i) const { return {j.at(i), path + "[" + std::to_string(i) + "]"}; }
  std::size_t size() const {
    if (!j.is_array()) throw InputError(path + ": expected an array");
    return j.size();
  }
  std::string str() const {
    if (!j.is_string()) throw InputError(path + ": expected a string");
    return j.get<std::string>();
  }
  int integer() const {
    if (!j.is_number_integer()) throw InputError(path + ": expected an integer");
    return j.get<int>();
  }
  bool boolean() const {
    if (!j.is_boolean()) throw InputError(path + ": expected true or false");
    return j.get<bool>();
  }
  double number() const {
    if (j.is_string()) {
      try {
        return parse_double(j.get<std::string>());
      } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
      }
    }
    if (j.is_number()) return j.get<double>();
    throw InputError(path + ": expected a decimal string");
  }
  Vec vec() const {
    Vec v(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) v[static_cast<Eigen::Index>(i)] = at(i).number();
    return v;
  }
  Mat mat(Eigen::Index cols) const {
    Mat m(static_cast<Eigen::Index>(size()), cols);
    for (std::size_t i = 0; i < size(); ++i) {
      Node row = at(i);
      if (static_cast<Eigen::Index>(row.size()) != cols)
        throw InputError(row.path + ": expected " + std::to_string(cols) + " entries");
      for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), c) = row.at(static_cast<std::size_t>(c)).number();
    }
    return m;
  }
  std::vector<std::string> strings() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).str());
    return out;
  }
};

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(format_double(v[i]));
  return a;
}

json mat_json(const Mat& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(format_double(m(r, c)));
    a.push_back(row);
  }
  return a;
}

// Facets of (p, q) lying in the closed stratum of each chain with breaks.
std::vector<std::pair<Chain, std::vector<FacetRef>>> strata_of(const StratifiedFamily& fam, const std::string& p,
                                                                 const std::string& q) {
  std::vector<std::pair<Chain, std::vector<FacetRef>>> out;
  const auto& sp = fam.space(p, q);
  for (const auto& chain : enumerate_chains(fam.poset, p, q)) {
    if (chain.length() == 0) continue;
    const auto inner = chain.interior();
    const std::set<std::string> labels(inner.begin(), inner.end());
    std::vector<FacetRef> facets;
    for (int c = 0; c < static_cast<int>(sp.charts().size()); ++c) {
      const auto& ch = sp.chart(c);
      for (int i = 0; i < ch.dim(); ++i)
        for (Side s : {Side::Lower, Side::Upper})
          if (ch.closed(i, s) && labels.count(ch.face(i, s))) facets.push_back({c, i, s});
    }
    out.emplace_back(chain, std::move(facets));
  }
  return out;
}

json facet_json(const FacetRef& f) { return json::array({f.chart, f.coord, f.side == Side::Lower ? "lo" : "hi"}); }

} // namespace

MorseSystem make_system(const MorseSystemSpec& spec) {
  auto constant = [](const std::string& text) { return Expression::parse(text, {}).value(Vec()); };
  std::vector<std::pair<double, double>> box;
  for (const auto& [lo, hi] : spec.box) box.emplace_back(constant(lo), constant(hi));
  std::vector<double> period;
  for (const auto& p : spec.period) period.push_back(constant(p));
  return custom_system(spec.name.empty() ? "custom" : spec.name, Expression::parse(spec.f, spec.variables),
                       std::move(box), std::move(period));
}

std::string serialize_family(const StratifiedFamily& fam, const std::optional<MorseSystemSpec>& morse) {
  json doc;
  doc["format"] = "glue-family";
  doc["version"] = 1;
  doc["name"] = fam.name;

  json points = json::array();
  for (const auto& pt : fam.poset.points()) {
    json e;
    e["id"] = pt.id;
    if (pt.index) e["index"] = *pt.index;
    points.push_back(e);
  }
  json succ = json::array();
  for (const auto& [a, b] : fam.poset.cover_edges()) succ.push_back(json::array({a, b}));
  doc["poset"] = {{"points", points}, {"succ", succ}};

  json spaces = json::array(), strata = json::array();
  for (const auto& [key, sp] : fam.spaces) {
    json charts = json::array();
    for (int c = 0; c < static_cast<int>(sp.charts().size()); ++c) {
      const auto& ch = sp.chart(c);
      if (ch.kind != "affine" && ch.kind != "circle")
        throw Unsupported("chart " + std::to_string(c) + " of (" + key.first + "," + key.second +
                          ") is known only by its evaluators and cannot be written");
      json box = json::array();
      for (const auto& iv : ch.box) {
        json b;
        b["lo"] = format_double(iv.lo);
        b["hi"] = format_double(iv.hi);
        b["lo_closed"] = iv.lo_closed;
        b["hi_closed"] = iv.hi_closed;
        if (iv.lo_closed) b["lo_face"] = iv.lo_face;
        if (iv.hi_closed) b["hi_face"] = iv.hi_face;
        box.push_back(b);
      }
      json cj;
      cj["kind"] = ch.kind;
      cj["box"] = box;
      if (ch.kind == "affine") {
        cj["origin"] = vec_json(ch.origin);
        cj["linear"] = mat_json(ch.linear);
      }
      charts.push_back(cj);
    }
    spaces.push_back({{"pair", json::array({key.first, key.second})},
                      {"dim", sp.dim()},
                      {"ambient_dim", sp.ambient_dim()},
                      {"charts", charts}});
    for (const auto& [chain, facets] : strata_of(fam, key.first, key.second)) {
      json fs = json::array();
      for (const auto& f : facets) fs.push_back(facet_json(f));
      strata.push_back({{"pair", json::array({key.first, key.second})}, {"chain", chain.ids()}, {"facets", fs}});
    }
  }
  doc["spaces"] = spaces;
  doc["strata"] = strata;

  json embs = json::array();
  for (const auto& [key, emb] : fam.embeddings) {
    const auto& [p, r, q] = key;
    if (!emb.affine) throw Unsupported("embedding (" + p + "," + r + "," + q + ") is not piecewise affine and cannot be written");
    json pieces = json::array();
    for (const auto& pc : *emb.affine)
      pieces.push_back({{"left_chart", pc.left_chart},
                        {"right_chart", pc.right_chart},
                        {"target_chart", pc.target_chart},
                        {"matrix", mat_json(pc.matrix)},
                        {"offset", vec_json(pc.offset)}});
    embs.push_back({{"triple", json::array({p, r, q})}, {"pieces", pieces}});
  }
  doc["embeddings"] = embs;

  if (morse) {
    json box = json::array();
    for (const auto& [lo, hi] : morse->box) box.push_back(json::array({lo, hi}));
    doc["morse_system"] = {{"name", morse->name},
                           {"f", morse->f},
                           {"variables", morse->variables},
                           {"box", box},
                           {"period", morse->period}};
  }
  return doc.dump(2) + "\n";
}

FamilyDocument parse_family(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("family file is not JSON: ") + e.what());
  }
  Node root{doc, "$"};
  if (!doc.is_object()) throw InputError("$: expected an object");
  if (auto f = root.find("format"); f && f->str() != "glue-family") throw InputError("$.format: expected 'glue-family'");
  if (auto v = root.find("version"); v && v->integer() != 1)
    throw InputError("$.version: unsupported version " + std::to_string(v->integer()));

  FamilyDocument out;
  StratifiedFamily& fam = out.family;
  if (auto n = root.find("name")) fam.name = n->str();

  std::vector<CriticalPoint> points;
  std::vector<std::pair<std::string, std::string>> succ;
  if (auto poset = root.find("poset")) {
    Node pts = poset->at("points");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      Node e = pts.at(i);
      CriticalPoint cp{e.at("id").str(), std::nullopt};
      if (auto ix = e.find("index")) cp.index = ix->integer();
      points.push_back(cp);
    }
    if (auto s = poset->find("succ"))
      for (std::size_t i = 0; i < s->size(); ++i) {
        auto pair = s->at(i).strings();
        if (pair.size() != 2) throw InputError(s->at(i).path + ": expected [a, b]");
        succ.emplace_back(pair[0], pair[1]);
      }
  }
  fam.poset = CriticalPoset(points, succ);

  auto pair_of = [&](const Node& n) {
    auto ids = n.strings();
    if (ids.size() != 2) throw InputError(n.path + ": expected [p, q]");
    if (!fam.poset.succ(ids[0], ids[1])) throw InputError(n.path + ": " + ids[0] + " is not above " + ids[1]);
    return PairKey{ids[0], ids[1]};
  };

  if (auto spaces = root.find("spaces"))
    for (std::size_t i = 0; i < spaces->size(); ++i) {
      Node s = spaces->at(i);
      const PairKey key = pair_of(s.at("pair"));
      if (fam.spaces.count(key)) throw InputError(s.path + ": pair listed twice");
      const int dim = s.at("dim").integer();
      const int ambient = s.at("ambient_dim").integer();
      std::vector<CornerChart> charts;
      Node cs = s.at("charts");
      for (std::size_t c = 0; c < cs.size(); ++c) {
        Node ch = cs.at(c);
        std::vector<Interval> box;
        Node bx = ch.at("box");
        for (std::size_t k = 0; k < bx.size(); ++k) {
          Node b = bx.at(k);
          Interval iv;
          iv.lo = b.at("lo").number();
          iv.hi = b.at("hi").number();
          iv.lo_closed = b.at("lo_closed").boolean();
          iv.hi_closed = b.at("hi_closed").boolean();
          if (auto f = b.find("lo_face")) iv.lo_face = f->str();
          if (auto f = b.find("hi_face")) iv.hi_face = f->str();
          box.push_back(iv);
        }
        const std::string kind = ch.at("kind").str();
        if (kind == "affine") {
          Vec origin = ch.at("origin").vec();
          if (origin.size() != ambient) throw InputError(ch.path + ".origin: expected " + std::to_string(ambient) + " entries");
          Mat linear = ch.at("linear").mat(static_cast<Eigen::Index>(box.size()));
          if (linear.rows() != ambient) throw InputError(ch.path + ".linear: expected " + std::to_string(ambient) + " rows");
          charts.push_back(CornerChart::affine(std::move(box), std::move(origin), std::move(linear)));
        } else if (kind == "circle") {
          if (box.size() != 1 || ambient != 2) throw InputError(ch.path + ": a circle chart has one coordinate in the plane");
          if (box[0].lo_closed || box[0].hi_closed) throw InputError(ch.path + ": a circle chart is open");
          charts.push_back(CornerChart::circle_arc(box[0].lo, box[0].hi));
        } else {
          throw InputError(ch.path + ".kind: unknown chart kind '" + kind + "'");
        }
      }
      try {
        fam.spaces[key] = CorneredSpace(dim, ambient, std::move(charts));
      } catch (const InputError& e) {
        throw InputError(s.path + ": " + e.what());
      }
    }

  if (auto strata = root.find("strata")) {
    std::map<std::pair<PairKey, Chain>, std::vector<FacetRef>> expect;
    for (const auto& [key, sp] : fam.spaces)
      for (auto& [chain, facets] : strata_of(fam, key.first, key.second)) expect[{key, chain}] = facets;
    for (std::size_t i = 0; i < strata->size(); ++i) {
      Node s = strata->at(i);
      const PairKey key = pair_of(s.at("pair"));
      const Chain chain(s.at("chain").strings());
      auto it = expect.find({key, chain});
      if (it == expect.end()) throw InputError(s.path + ": no chain " + chain.str() + " in this pair");
      Node fs = s.at("facets");
      std::vector<FacetRef> got;
      for (std::size_t k = 0; k < fs.size(); ++k) {
        Node f = fs.at(k);
        if (f.size() != 3) throw InputError(f.path + ": expected [chart, coord, side]");
        const std::string side = f.at(2).str();
        if (side != "lo" && side != "hi") throw InputError(f.at(2).path + ": expected 'lo' or 'hi'");
        got.push_back({f.at(0).integer(), f.at(1).integer(), side == "lo" ? Side::Lower : Side::Upper});
      }
      if (got != it->second) throw InputError(s.path + ": facets disagree with the face labels");
    }
  }

  if (auto embs = root.find("embeddings"))
    for (std::size_t i = 0; i < embs->size(); ++i) {
      Node e = embs->at(i);
      auto ids = e.at("triple").strings();
      if (ids.size() != 3) throw InputError(e.path + ".triple: expected [p, r, q]");
      if (!fam.poset.succ(ids[0], ids[1]) || !fam.poset.succ(ids[1], ids[2]))
        throw InputError(e.path + ".triple: not a chain");
      const int dl = fam.space(ids[0], ids[1]).dim(), dr = fam.space(ids[1], ids[2]).dim();
      const int dt = fam.space(ids[0], ids[2]).dim();
      std::vector<AffinePiece> pieces;
      Node ps = e.at("pieces");
      for (std::size_t k = 0; k < ps.size(); ++k) {
        Node pn = ps.at(k);
        AffinePiece pc;
        pc.left_chart = pn.at("left_chart").integer();
        pc.right_chart = pn.at("right_chart").integer();
        pc.target_chart = pn.at("target_chart").integer();
        pc.matrix = pn.at("matrix").mat(dl + dr);
        pc.offset = pn.at("offset").vec();
        if (pc.matrix.rows() != dt || pc.offset.size() != dt)
          throw InputError(pn.path + ": expected " + std::to_string(dt) + " output coordinates");
        pieces.push_back(std::move(pc));
      }
      fam.embeddings[{ids[0], ids[1], ids[2]}] = ProductEmbedding::from_affine(std::move(pieces));
    }

  if (auto ms = root.find("morse_system")) {
    MorseSystemSpec spec;
    if (auto n = ms->find("name")) spec.name = n->str();
    spec.f = ms->at("f").str();
    spec.variables = ms->at("variables").strings();
    Node box = ms->at("box");
    for (std::size_t k = 0; k < box.size(); ++k) {
      auto b = box.at(k).strings();
      if (b.size() != 2) throw InputError(box.at(k).path + ": expected [lo, hi]");
      spec.box.emplace_back(b[0], b[1]);
    }
    if (auto p = ms->find("period")) spec.period = p->strings();
    try {
      make_system(spec);
    } catch (const InputError& e) {
      throw InputError(ms->path + ": " + e.what());
    }
    out.morse_system = spec;
  }
  return out;
}

FamilyDocument load_family(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read family file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_family(ss.str());
}

void save_family(const std::string& path, const StratifiedFamily& family,
                 const std::optional<MorseSystemSpec>& morse_system) {
  const std::string text = serialize_family(family, morse_system);
  std::ofstream out(path);
  if (!out) throw InputError("cannot write family file '" + path + "'");
  out << text;
}

} // namespace glue
