// Exit codes: 0 success or affirmative verdict, 1 negative verdict, 2 input error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

#include "CLI11.hpp"
#include "lamina/certificate.hpp"
#include "lamina/decompose.hpp"
#include "lamina/detect.hpp"
#include "lamina/generators.hpp"
#include "lamina/io.hpp"
#include "lamina/splitting.hpp"

#ifndef LAMINA_DEFAULT_FIXTURES
#define LAMINA_DEFAULT_FIXTURES "fixtures"
#endif

namespace fs = std::filesystem;
using namespace lamina;

namespace {

constexpr int kOk = 0;
constexpr int kNegative = 1;
constexpr int kInputError = 2;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// `fixtures/<name>` resolves against $LAMINA_FIXTURES first, then the working
// directory, then the source tree's fixture directory.
std::string resolve(const std::string& path) {
  const std::string prefix = "fixtures/";
  if (path.rfind(prefix, 0) == 0) {
    const auto rest = path.substr(prefix.size());
    if (const char* env = std::getenv("LAMINA_FIXTURES"); env && *env) {
      if (fs::exists(fs::path(env) / rest)) return (fs::path(env) / rest).string();
    }
    if (fs::exists(path)) return path;
    if (fs::exists(fs::path(LAMINA_DEFAULT_FIXTURES) / rest)) return (fs::path(LAMINA_DEFAULT_FIXTURES) / rest).string();
  }
  if (!fs::exists(path)) throw InputError("no such file: " + path);
  return path;
}

BranchedSurfaceComplex load(const std::string& path) {
  const auto b = read_complex_file(resolve(path));
  if (auto v = validate(b); !v.empty()) throw InvalidComplex(std::move(v));
  return b;
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") std::cout << text;
  else write_text_file(out, text);
}

std::string join(const SectorSet& s) {
  std::string r;
  for (const auto& x : s) r += (r.empty() ? "" : " ") + x;
  return r;
}

std::string join(const std::vector<std::string>& s) {
  std::string r;
  for (const auto& x : s) r += (r.empty() ? "" : " ") + x;
  return r;
}

std::string read_text(const std::string& path) {
  std::ifstream in(resolve(path));
  if (!in) throw InputError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int check_certificate(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("certificate is not JSON: ") + e.what());
  }
  const auto report = check_lamination_certificate(doc);
  if (report.ok()) {
    std::cout << "certificate ok: " << doc.at("steps").size() << " step(s) replayed\n";
    return kOk;
  }
  std::cout << "certificate rejected\n";
  for (const auto& p : report.problems) std::cout << "  " << p << "\n";
  return kNegative;
}

// "p/q", or a decimal with optional exponent, read exactly.
Rational exact_decimal(const std::string& text) {
  try {
    return parse_rational(text);
  } catch (const std::invalid_argument&) {
  }
  static const std::regex form(R"(([0-9]*)(?:\.([0-9]*))?(?:[eE]([+-]?[0-9]+))?)");
  std::smatch m;
  if (!std::regex_match(text, m, form) || m[1].length() + m[2].length() == 0)
    throw InputError("--epsilon: not a number: " + text);
  const std::string digits = m[1].str() + m[2].str();
  long exp = (m[3].matched ? std::stol(m[3].str()) : 0) - static_cast<long>(m[2].length());
  mpz_class ten = 10, scale;
  mpz_pow_ui(scale.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(exp < 0 ? -exp : exp));
  Rational r{mpz_class(digits)};
  r = exp < 0 ? Rational(r / scale) : Rational(r * scale);
  r.canonicalize();
  if (r <= 0) throw InputError("--epsilon must be positive");
  return r;
}

// With no --region: every non-disk sector carrying an essential curve, which is always safe.
SafeRegion initial_region(const BranchedSurfaceComplex& b, const std::vector<std::string>& ids) {
  SafeRegion r;
  if (!ids.empty()) {
    r.insert(ids.begin(), ids.end());
    return r;
  }
  for (const auto& [id, s] : b.sectors)
    if (!s.is_disk() && s.essential_curve) r.insert(id);
  return r;
}

BranchedSurfaceComplex generated(const std::string& name, int k, std::uint64_t seed, int size) {
  if (name == "disk_sink") return gen::disk_sink();
  if (name == "pita") return gen::pita();
  if (name == "bubble_over_sink") return gen::bubble_over_sink();
  if (name == "necklace") return gen::necklace(k);
  if (name == "necklace_all_disk") return gen::necklace_all_disk(k);
  if (name == "coherent_mobius") return gen::coherent_mobius(k);
  if (name == "closed_surface") return gen::closed_surface(k);
  if (name == "random") return gen::random(seed, size);
  throw InputError("unknown generator " + name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Combinatorial branched surfaces: detectors, rewrites, laminations, splittings"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string epsilon = "1e-12";
  app.add_option("--epsilon", epsilon, "holonomy verification tolerance, exact: p/q or decimal like 1e-12");

  std::string file, out;
  auto needs_file = [&](CLI::App* sub) {
    sub->add_option("file", file, "complex file")->required();
    return sub;
  };

  auto* validate_cmd = needs_file(app.add_subcommand("validate", "check structural invariants"));
  auto* sinks_cmd = needs_file(app.add_subcommand("sink-disks", "list sink disks (exit 1 when any exist)"));
  auto* removable_cmd = needs_file(app.add_subcommand("removable", "list removable disks"));
  auto* efficient_cmd = needs_file(app.add_subcommand("make-efficient", "delete removable disks until none remain"));
  efficient_cmd->add_option("--out", out, "final complex");
  auto* bubbles_cmd = needs_file(app.add_subcommand("bubbles", "list bubble candidates"));
  auto* collapse_cmd = needs_file(app.add_subcommand("collapse", "collapse a bubble pair"));
  std::vector<std::string> pair;
  bool confirm = false;
  collapse_cmd->add_option("--pair", pair, "two disk ids; default: every confirmed bubble")->expected(2);
  collapse_cmd->add_flag("--confirm", confirm, "assert the pair is a trivial bubble");
  collapse_cmd->add_option("--out", out, "collapsed complex");
  auto* chains_cmd = needs_file(app.add_subcommand("chains", "chain/cycle decomposition of the disk sectors"));
  auto* cores_cmd = needs_file(app.add_subcommand("cores", "core annulus or Möbius band of every cycle"));
  auto* dot_cmd = needs_file(app.add_subcommand("export-dot", "DOT digraph of the out-edge assignment"));
  dot_cmd->add_option("--out", out, "DOT file");

  auto* laminate_cmd = app.add_subcommand("laminate", "build a lamination certificate, or check one");
  std::string check_path;
  bool reverse_chains = false;
  laminate_cmd->add_option("file", file, "complex file");
  laminate_cmd->add_option("--check", check_path, "certificate to re-validate");
  laminate_cmd->add_option("--out", out, "certificate file");
  laminate_cmd->add_flag("--reverse-chains", reverse_chains, "process independent chains in the opposite order");

  auto* split_cmd = needs_file(app.add_subcommand("split", "run a splitting script against a safe region"));
  std::string script;
  std::vector<std::string> region_ids;
  split_cmd->add_option("--script", script, "move script")->required();
  split_cmd->add_option("--region", region_ids, "initial safe region (default: non-disk sectors with essential curves)")
      ->delimiter(',');
  split_cmd->add_option("--out", out, "directory for the trace");

  auto* gen_cmd = app.add_subcommand("generate", "print a generated complex");
  std::string gen_name;
  int k = 3, size = 8;
  std::uint64_t seed = 0;
  gen_cmd->add_option("name", gen_name, "disk_sink|pita|bubble_over_sink|necklace|necklace_all_disk|coherent_mobius|closed_surface|random")
      ->required();
  gen_cmd->add_option("-k", k, "necklace length or genus");
  gen_cmd->add_option("--seed", seed);
  gen_cmd->add_option("--size", size);
  gen_cmd->add_option("--out", out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  try {
    if (*gen_cmd) {
      emit(out, serialize_complex(generated(gen_name, k, seed, size)));
      return kOk;
    }
    if (*laminate_cmd) {
      if (!check_path.empty()) return check_certificate(check_path);
      if (file.empty()) throw InputError("laminate needs a complex file or --check");
      LaminationOptions opts;
      opts.epsilon = exact_decimal(epsilon);
      opts.reverse_independent_chains = reverse_chains;
      try {
        const auto cert = build_lamination_certificate(load(file), opts);
        std::cout << "certificate built: " << cert.document.at("steps").size() << " step(s)\n";
        std::cout << cert.document.at("ledger").at("verdict").get<std::string>() << "\n";
        if (!out.empty()) write_text_file(out, cert.document.dump(1) + "\n");
        return kOk;
      } catch (const CertificateError& e) {
        std::cout << "refused: " << e.what() << (e.items().empty() ? "" : ": " + join(e.items())) << "\n";
      } catch (const LaminationError& e) {
        std::cout << "refused: " << e.what() << "\n";
      }
      return kNegative;
    }
    if (*validate_cmd) {
      const auto b = read_complex_file(resolve(file));
      const auto v = validate(b);
      for (const auto& x : v) std::cout << "violation " << x.code << ": " << x.message << "\n";
      for (const auto& x : lint(b)) std::cout << "note " << x.code << ": " << x.message << "\n";
      if (!v.empty()) return kNegative;
      std::cout << "valid\n";
      return kOk;
    }
    const auto b = load(file);
    if (*split_cmd) {
      const auto moves = parse_split_script(read_text(script));
      const auto trace = run_split_script(b, initial_region(b, region_ids), moves);
      std::ostringstream regions;
      for (std::size_t i = 0; i < trace.entries.size(); ++i)
        regions << i << ": " << join(trace.entries[i].region) << "\n";
      std::cout << regions.str();
      if (!out.empty()) {
        fs::create_directories(out);
        for (std::size_t i = 0; i < trace.entries.size(); ++i)
          write_text_file((fs::path(out) / ("step" + std::to_string(i) + ".lamina")).string(),
                          serialize_complex(trace.entries[i].complex));
        write_text_file((fs::path(out) / "trace.txt").string(), regions.str());
      }
      if (trace.failed_move) {
        std::cout << "aborted at move " << *trace.failed_move << ": " << trace.error << "\n";
        return kNegative;
      }
      const auto& last = trace.entries.back();
      const auto v = certify_laminar(last.complex, last.region);
      if (v.laminar_conditional) {
        std::cout << "LAMINAR (conditional on the asserted flags)\n";
        return kOk;
      }
      std::cout << "not certified";
      if (!v.uncovered.empty()) std::cout << "; uncovered: " << join(v.uncovered);
      if (!v.missing_assertions.empty()) std::cout << "; unasserted: " << join(v.missing_assertions);
      for (const auto& [x, y] : v.unconfirmed_bubbles) std::cout << "; unconfirmed bubble " << x << " " << y;
      std::cout << "\n";
      return kNegative;
    }
    if (*sinks_cmd) {
      const auto s = find_sink_disks(b);
      if (s.empty()) {
        std::cout << "no sink disks\n";
        return kOk;
      }
      std::cout << "sink disks: " << join(s) << "\n";
      return kNegative;
    }
    if (*removable_cmd) {
      const auto s = find_removable_disks(b);
      std::cout << (s.empty() ? "no removable disks" : "removable disks: " + join(s)) << "\n";
      return kOk;
    }
    if (*efficient_cmd) {
      const auto steps = make_efficient(b);
      for (std::size_t i = 1; i < steps.size(); ++i) std::cout << "step " << i << ": deleted " << *steps[i].deleted << "\n";
      std::cout << "efficient after " << steps.size() - 1 << " deletion(s)\n";
      if (!out.empty()) write_text_file(out, serialize_complex(steps.back().complex));
      return kOk;
    }
    if (*bubbles_cmd) {
      const auto c = find_bubble_candidates(b);
      if (c.empty()) std::cout << "no bubble candidates\n";
      for (const auto& [x, y] : c)
        std::cout << "candidate " << x << " " << y << (b.is_confirmed_bubble(x, y) ? " (confirmed)" : "") << "\n";
      return kOk;
    }
    if (*collapse_cmd) {
      BranchedSurfaceComplex c;
      try {
        c = pair.empty() ? collapse_confirmed_bubbles(b) : collapse_bubble(b, make_pair_sorted(pair[0], pair[1]), confirm);
      } catch (const RewriteError& e) {
        std::cout << "refused: " << e.what() << "\n";
        return kNegative;
      }
      std::cout << "collapsed: " << c.sectors.size() << " sector(s), " << c.edges.size() << " edge(s)\n";
      if (!out.empty()) write_text_file(out, serialize_complex(c));
      return kOk;
    }
    if (*chains_cmd || *cores_cmd || *dot_cmd) {
      ChainCycleDecomposition d;
      try {
        d = decompose_chains_cycles(b);
      } catch (const DecompositionError& e) {
        std::cout << "no decomposition: " << e.what() << "\n";
        return kNegative;
      }
      if (*dot_cmd) {
        emit(out, export_dot(b, d));
        return kOk;
      }
      for (std::size_t i = 0; i < d.cycles.size(); ++i) {
        std::cout << "cycle " << i + 1 << ":";
        for (const auto& s : d.cycles[i]) std::cout << " " << s << " -[" << d.out_edge.at(s) << "]->";
        std::cout << " " << d.cycles[i].front();
        if (*cores_cmd) std::cout << "  " << to_string(cycle_core(b, d.cycles[i], d.out_edge).kind);
        std::cout << "\n";
      }
      if (*chains_cmd)
        for (std::size_t i = 0; i < d.chains.size(); ++i) {
          std::cout << "chain " << i + 1 << ":";
          for (const auto& s : d.chains[i].disks) std::cout << " " << s << " -[" << d.out_edge.at(s) << "]->";
          std::cout << " " << d.chains[i].target << "\n";
        }
      return kOk;
    }
  } catch (const SplitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const InvalidComplex& e) {
    std::cerr << "error: invalid complex\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v.code << ": " << v.message << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
