#include "glue/report.hpp"

#include <sstream>

#include <json.hpp>

#include "glue/error.hpp"
#include "glue/family_io.hpp"

namespace glue {

using json = nlohmann::ordered_json;

namespace {

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

std::string chain_or_empty(const Chain& c) { return c.size() ? c.str() : ""; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

} // namespace

VerifyReport run_verify(const StratifiedFamily& family, const VerifyConfig& config) {
  VerifyReport rep;
  rep.family = family.name;
  rep.config = config;
  rep.validation = validate_family(family, config.samples, config.seed, config.tol);
  if (!rep.validation.ok) {
    rep.passed = false;
    const auto* f = rep.validation.first_failure();
    rep.first_failure = f->condition + " " + f->where + ": " + f->witness;
    return rep;
  }
  CollarOptions opt;
  opt.epsilon_floor = config.epsilon_floor;
  opt.seed = config.seed;
  try {
    const CollarAtlas atlas = build_collars(family, opt);
    rep.atlas = atlas.records();
    rep.identities = verify_atlas(atlas, config.samples, config.seed, config.tol);
  } catch (const NumericalAbort& e) {
    rep.passed = false;
    rep.abort = e.what();
    rep.first_failure = std::string("collar construction: ") + e.what();
    return rep;
  }
  for (const auto& c : rep.identities)
    if (!c.passed && rep.passed) {
      rep.passed = false;
      rep.first_failure = c.identity + " " + c.pair + " " + chain_or_empty(c.first) + " " + chain_or_empty(c.second) +
                          ": " + c.witness;
    }
  return rep;
}

std::string verify_json(const VerifyReport& rep) {
  json doc;
  doc["schema_version"] = 1;
  doc["command"] = "verify";
  doc["family"] = rep.family;
  doc["config"] = {{"samples", rep.config.samples},
                   {"tol", rep.config.tol},
                   {"seed", rep.config.seed},
                   {"epsilon_floor", rep.config.epsilon_floor}};
  doc["passed"] = rep.passed;
  doc["first_failure"] = rep.first_failure.empty() ? json(nullptr) : json(rep.first_failure);
  if (!rep.abort.empty()) doc["abort"] = rep.abort;
  json val = json::array();
  for (const auto& c : rep.validation.conditions)
    val.push_back({{"condition", c.condition},
                   {"where", c.where},
                   {"samples", c.samples},
                   {"max_residual", c.max_residual},
                   {"pass", c.passed},
                   {"witness", c.witness}});
  doc["validation"] = val;
  json atlas = json::array();
  for (const auto& r : rep.atlas)
    atlas.push_back({{"chain", r.chain.ids()},
                     {"epsilon", format_double(r.epsilon)},
                     {"mode", r.mode},
                     {"corrected_junctions", r.corrected_junctions}});
  doc["atlas"] = atlas;
  json ids = json::array();
  for (const auto& c : rep.identities)
    ids.push_back({{"identity", c.identity},
                   {"pair", c.pair},
                   {"I1", chain_or_empty(c.first)},
                   {"I2", chain_or_empty(c.second)},
                   {"samples", c.samples},
                   {"max_residual", c.max_residual},
                   {"pass", c.passed},
                   {"witness", c.witness}});
  doc["identities"] = ids;
  return doc.dump(2) + "\n";
}

std::string verify_csv(const VerifyReport& rep) {
  std::ostringstream out;
  out << "family,identity,pair,I1,I2,samples,max_residual,pass\n";
  auto row = [&](const std::string& identity, const std::string& pair, const std::string& i1, const std::string& i2,
                 int samples, double residual, bool pass) {
    out << csv_field(rep.family) << ',' << csv_field(identity) << ',' << csv_field(pair) << ',' << csv_field(i1) << ','
        << csv_field(i2) << ',' << samples << ',' << format_double(residual) << ',' << (pass ? "true" : "false") << '\n';
  };
  for (const auto& c : rep.validation.conditions) row(c.condition, c.where, "", "", c.samples, c.max_residual, c.passed);
  for (const auto& c : rep.identities)
    row(c.identity, c.pair, chain_or_empty(c.first), chain_or_empty(c.second), c.samples, c.max_residual, c.passed);
  return out.str();
}

MorseReport run_morse(MorseModel& model, const std::vector<double>& lambdas) {
  MorseReport rep;
  rep.system = model.system().name;
  rep.options = model.options();
  rep.critical_points = model.critical_points();
  for (const auto& c : rep.critical_points)
    if (!c.morse)
      throw InputError("not a Morse function: critical point " + c.id + " has Hessian eigenvalue " +
                       std::to_string(c.min_abs_eigenvalue));
  const auto& cps = rep.critical_points;
  for (const auto& a : cps)
    for (const auto& b : cps) {
      if (a.id == b.id || !(a.value > b.value)) continue;
      if (a.index > b.index) rep.moduli.push_back(model.moduli(a.id, b.id));
      rep.transversality.push_back(model.check_transversality(a.id, b.id));
      const int dim = a.index - b.index - 1;
      if (dim >= 2 && !model.moduli(a.id, b.id).trajectories.empty())
        rep.notes.push_back("M(" + a.id + "," + b.id + ") has dimension " + std::to_string(dim) + "; arcs not computed");
      if (dim != 1 || model.moduli(a.id, b.id).trajectories.empty()) continue;
      const auto& arcs = model.detect_broken(a.id, b.id);
      rep.arc_pairs.emplace_back(a.id, b.id);
      rep.arcs.push_back(arcs);
      for (const auto& arc : arcs)
        for (const auto& e : arc.ends)
          for (double lambda : lambdas) {
            if (!(lambda < arc.length)) continue;
            GlueSample g{a.id, e.via, b.id, e.first, e.second, lambda, 0.0};
            const Trajectory t = model.glue(a.id, e.via, b.id, e.first, e.second, lambda);
            const auto& g1 = model.moduli(a.id, e.via).trajectories.at(e.first);
            const auto& g2 = model.moduli(e.via, b.id).trajectories.at(e.second);
            g.hausdorff = hausdorff(model.system(), {&t}, {&g1, &g2});
            rep.glue.push_back(g);
          }
    }
  return rep;
}

std::string morse_json(const MorseReport& rep) {
  json doc;
  doc["schema_version"] = 1;
  doc["command"] = "morse";
  doc["system"] = rep.system;
  doc["options"] = {{"resolution", rep.options.resolution},
                    {"grid", rep.options.grid},
                    {"rtol", rep.options.flow.rtol},
                    {"atol", rep.options.flow.atol},
                    {"capture", rep.options.flow.capture},
                    {"start_radius", rep.options.start_radius},
                    {"source_radius", rep.options.source_radius},
                    {"spacing", rep.options.spacing},
                    {"arc_metric", rep.options.arc_metric == ArcMetric::Hausdorff ? "hausdorff" : "anchor"}};
  json cps = json::array();
  for (const auto& c : rep.critical_points)
    cps.push_back({{"id", c.id},
                   {"location", vec_json(c.location)},
                   {"value", c.value},
                   {"index", c.index},
                   {"gradient_norm", c.gradient_norm},
                   {"min_abs_eigenvalue", c.min_abs_eigenvalue},
                   {"morse", c.morse}});
  doc["critical_points"] = cps;
  json mod = json::array();
  for (const auto& m : rep.moduli) {
    json ts = json::array();
    for (const auto& t : m.trajectories)
      ts.push_back({{"shot", t.shot},
                    {"branch", t.branch},
                    {"anchor", vec_json(t.anchor)},
                    {"samples", t.x.size()}});
    json un = json::array();
    for (const auto& u : m.unresolved) un.push_back({{"lo", u.lo}, {"hi", u.hi}, {"why", u.why}});
    mod.push_back({{"p", m.p},
                   {"q", m.q},
                   {"dim", m.dim},
                   {"count", m.dim == 0 ? json(m.trajectories.size()) : json(nullptr)},
                   {"trajectories", ts},
                   {"unresolved", un}});
  }
  doc["moduli"] = mod;
  json arcs = json::array();
  for (std::size_t i = 0; i < rep.arcs.size(); ++i)
    for (const auto& a : rep.arcs[i]) {
      json ends = json::array();
      for (const auto& e : a.ends) {
        json series = json::array();
        for (const auto& [l, h] : e.series) series.push_back(json::array({l, h}));
        ends.push_back({{"via", e.via},
                        {"first", e.first},
                        {"second", e.second},
                        {"shot", e.shot},
                        {"hausdorff", e.hausdorff},
                        {"series", series}});
      }
      arcs.push_back({{"p", rep.arc_pairs[i].first},
                      {"q", rep.arc_pairs[i].second},
                      {"circle", a.circle},
                      {"lo", a.lo},
                      {"hi", a.hi},
                      {"length", a.length},
                      {"ends", ends}});
    }
  doc["arcs"] = arcs;
  json tr = json::array();
  for (const auto& t : rep.transversality)
    tr.push_back({{"p", t.p},
                  {"q", t.q},
                  {"expected_dim", t.expected_dim},
                  {"observed_dims", t.observed_dims},
                  {"min_singular_value", t.min_singular_value},
                  {"passed", t.passed},
                  {"confidence", t.confidence}});
  doc["transversality"] = tr;
  json gl = json::array();
  for (const auto& g : rep.glue)
    gl.push_back({{"p", g.p},
                  {"r", g.r},
                  {"q", g.q},
                  {"first", g.first},
                  {"second", g.second},
                  {"lambda", g.lambda},
                  {"hausdorff", g.hausdorff}});
  doc["glue"] = gl;
  doc["notes"] = rep.notes;
  return doc.dump(2) + "\n";
}

} // namespace glue
