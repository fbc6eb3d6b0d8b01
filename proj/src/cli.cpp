#include "glue/cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "glue/error.hpp"
#include "glue/family_io.hpp"
#include "glue/morse_engine.hpp"
#include "glue/report.hpp"

namespace glue {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

bool is_builtin_system(const std::string& name) {
  for (const auto& n : builtin_system_names())
    if (n == name) return true;
  return false;
}

void write_file(const std::string& dir, const std::string& name, const std::string& text, std::ostream& out) {
  fs::create_directories(dir);
  const fs::path path = fs::path(dir) / name;
  std::ofstream f(path);
  if (!f) throw InputError("cannot write '" + path.string() + "'");
  f << text;
  out << "wrote " << path.string() << "\n";
}

void apply_mutation(StratifiedFamily& fam, const std::string& spec) {
  const auto ids = split(spec, ',');
  if (ids.size() != 3) throw InputError("--mutate expects p,r,q");
  mutate_flip(fam, ids[0], ids[1], ids[2]);
  fam.name += "+flip(" + spec + ")";
}

int cmd_generate(const std::string& name, std::optional<int> n, const std::string& mutate, const std::string& out_dir,
                 std::ostream& out) {
  StratifiedFamily fam;
  if (name == "cube") {
    if (!n) throw InputError("generate cube needs a dimension, e.g. 'generate cube 3'");
    fam = cube_family(*n);
  } else {
    if (n) throw InputError("generate " + name + " takes no number");
    fam = resolve_family(name);
  }
  if (!mutate.empty()) apply_mutation(fam, mutate);
  const std::string text = serialize_family(fam);
  if (out_dir.empty())
    out << text;
  else
    write_file(out_dir, (name == "cube" ? "cube" + std::to_string(*n) : name) + ".json", text, out);
  return kPass;
}

int cmd_verify(const std::string& source, const VerifyConfig& config, const std::string& mutate,
               const std::string& out_dir, std::ostream& out) {
  StratifiedFamily fam = resolve_family(source);
  if (!mutate.empty()) apply_mutation(fam, mutate);
  const VerifyReport rep = run_verify(fam, config);
  if (!out_dir.empty()) {
    write_file(out_dir, "report.json", verify_json(rep), out);
    write_file(out_dir, "residuals.csv", verify_csv(rep), out);
  }
  double worst = 0.0;
  for (const auto& c : rep.identities)
    if (c.identity.rfind("compat", 0) == 0 || c.identity == "associativity") worst = std::max(worst, c.max_residual);
  out << "verify " << (fam.name.empty() ? source : fam.name) << ": " << rep.validation.conditions.size()
      << " conditions, " << rep.identities.size() << " identity checks, max compatibility residual " << format_double(worst) << "\n";
  if (!rep.abort.empty()) {
    out << "ABORT " << rep.abort << "\n";
    return kNumericalAbort;
  }
  if (!rep.passed) {
    out << "FAIL " << rep.first_failure << "\n";
    return kIdentityFailure;
  }
  out << "PASS\n";
  return kPass;
}

struct MorseSource {
  std::string system;
  std::string function;
  std::string variables;
  std::string box;
  std::string period;
};

MorseSystem resolve_system(const MorseSource& src) {
  if (!src.function.empty()) {
    if (!src.system.empty()) throw InputError("give either --system or --function");
    MorseSystemSpec spec;
    spec.name = "custom";
    spec.f = src.function;
    spec.variables = split(src.variables, ',');
    if (spec.variables.empty()) throw InputError("--function needs --variables");
    if (src.box.empty()) {
      spec.box.assign(spec.variables.size(), {"-1", "1"});
    } else {
      for (const auto& iv : split(src.box, ',')) {
        const auto ends = split(iv, ':');
        if (ends.size() != 2) throw InputError("--box expects lo:hi,lo:hi,...");
        spec.box.emplace_back(ends[0], ends[1]);
      }
    }
    if (!src.period.empty()) spec.period = split(src.period, ',');
    return make_system(spec);
  }
  if (src.system.empty()) throw InputError("morse needs --system or --function");
  if (is_builtin_system(src.system)) return builtin_system(src.system);
  const auto doc = load_family(src.system);
  if (!doc.morse_system) throw InputError("'" + src.system + "' has no morse_system section");
  return make_system(*doc.morse_system);
}

int cmd_morse(const MorseSource& src, int resolution, bool export_fam, const std::string& out_dir, std::ostream& out) {
  MorseOptions opt;
  if (resolution > 0) opt.resolution = resolution;
  MorseModel model(resolve_system(src), opt);
  const MorseReport rep = run_morse(model);
  out << "system " << rep.system << ": " << rep.critical_points.size() << " critical points\n";
  for (const auto& c : rep.critical_points)
    out << "  " << c.id << " index " << c.index << " value " << format_double(c.value) << " |grad| "
        << format_double(c.gradient_norm) << "\n";
  for (const auto& m : rep.moduli) {
    if (m.trajectories.empty() && m.unresolved.empty()) continue;
    out << "  M(" << m.p << "," << m.q << ") dim " << m.dim;
    if (m.dim == 0) out << ": " << m.trajectories.size() << " trajectories";
    if (!m.unresolved.empty()) out << ", " << m.unresolved.size() << " unresolved";
    out << "\n";
  }
  for (std::size_t i = 0; i < rep.arcs.size(); ++i) {
    const auto& [p, q] = rep.arc_pairs[i];
    if (rep.arcs[i].size() == 1 && rep.arcs[i][0].circle) {
      out << "  Mbar(" << p << "," << q << "): circle of length " << format_double(rep.arcs[i][0].length) << "\n";
      continue;
    }
    std::size_t ends = 0;
    for (const auto& a : rep.arcs[i]) ends += a.ends.size();
    out << "  Mbar(" << p << "," << q << "): " << rep.arcs[i].size() << " arcs, " << ends << " broken ends\n";
  }
  bool transverse = true;
  for (const auto& t : rep.transversality) transverse = transverse && t.passed;
  for (const auto& n : rep.notes) out << "  note: " << n << "\n";
  if (!out_dir.empty()) {
    write_file(out_dir, "morse.json", morse_json(rep), out);
    if (export_fam) write_file(out_dir, "family.json", serialize_family(export_family(model)), out);
  } else if (export_fam) {
    out << serialize_family(export_family(model));
  }
  out << (transverse ? "transversality heuristics pass\n" : "FAIL transversality heuristics\n");
  return transverse ? kPass : kIdentityFailure;
}

} // namespace

StratifiedFamily resolve_family(const std::string& source) {
  if (source.rfind("cube", 0) == 0 && source.size() > 4 &&
      source.find_first_not_of("0123456789", 4) == std::string::npos)
    return cube_family(std::stoi(source.substr(4)));
  if (source == "empty") {
    StratifiedFamily fam;
    fam.name = "empty";
    return fam;
  }
  if (is_builtin_system(source)) {
    MorseModel model(builtin_system(source));
    return export_family(model);
  }
  if (!fs::exists(source)) throw InputError("unknown family '" + source + "' (not a built-in name or a file)");
  auto doc = load_family(source);
  if (doc.family.name.empty()) doc.family.name = fs::path(source).stem().string();
  return std::move(doc.family);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Collars and gluing maps on stratified families"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "write a family file");
  std::string gen_name, mutate, out_dir;
  std::vector<int> gen_n;
  gen->add_option("name", gen_name, "cube, empty, torus, sphere, parabola, separable")->required();
  gen->add_option("n", gen_n, "cube dimension")->expected(0, 1);
  gen->add_option("--mutate", mutate, "flip the first two output coordinates of iota_{p,r,q}");
  gen->add_option("--out", out_dir, "output directory (default: print)");

  auto* ver = app.add_subcommand("verify", "validate, build collars and check every identity");
  std::string family;
  VerifyConfig config;
  ver->add_option("--family", family, "built-in name or family file")->required();
  ver->add_option("--samples", config.samples, "samples per identity")->capture_default_str()->check(CLI::PositiveNumber);
  ver->add_option("--tol", config.tol, "residual tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  ver->add_option("--seed", config.seed, "random seed")->capture_default_str();
  ver->add_option("--epsilon-floor", config.epsilon_floor, "smallest collar width")->capture_default_str()->check(CLI::PositiveNumber);
  ver->add_option("--mutate", mutate, "flip the first two output coordinates of iota_{p,r,q}");
  ver->add_option("--out", out_dir, "directory for report.json and residuals.csv");

  auto* mor = app.add_subcommand("morse", "critical points, trajectories, arcs and gluing");
  MorseSource src;
  int resolution = 0;
  bool export_fam = false;
  mor->add_option("--system", src.system, "built-in name or family file with a morse_system section");
  mor->add_option("--function", src.function, "f as an expression");
  mor->add_option("--variables", src.variables, "comma-separated variable names");
  mor->add_option("--box", src.box, "lo:hi per variable (default -1:1)");
  mor->add_option("--period", src.period, "period per variable, 0 for none");
  mor->add_option("--resolution", resolution, "shots per unstable circle")->check(CLI::PositiveNumber);
  mor->add_flag("--export", export_fam, "also write the family of compactified moduli spaces");
  mor->add_option("--out", out_dir, "directory for morse.json (and family.json)");

  std::vector<std::string> argv_store{"glue"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kPass : kInputError;
  }

  try {
    if (*gen) return cmd_generate(gen_name, gen_n.empty() ? std::nullopt : std::optional<int>(gen_n[0]), mutate, out_dir, out);
    if (*ver) return cmd_verify(family, config, mutate, out_dir, out);
    if (*mor) return cmd_morse(src, resolution, export_fam, out_dir, out);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const Unsupported& e) {
    err << "unsupported: " << e.what() << "\n";
    return kInputError;
  } catch (const RangeError& e) {
    err << "range error: " << e.what() << "\n";
    return kInputError;
  } catch (const NumericalAbort& e) {
    err << "numerical abort: " << e.what() << "\n";
    return kNumericalAbort;
  }
  return kInputError;
}

} // namespace glue
