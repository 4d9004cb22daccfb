// Command-line front end. Subcommands expose the library pieces one at a
// time (grow, prune, couple, frag), `run` drives a named experiment from a
// config file plus flag overrides, and `verify` runs the acceptance battery.
// Exit codes: 0 success, 1 invariant failure, 2 usage error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nst/acceptance.hpp"
#include "nst/experiment.hpp"
#include "nst/fragmentation.hpp"
#include "nst/marchal.hpp"
#include "nst/parallel.hpp"
#include "nst/pruning.hpp"
#include "nst/serialize.hpp"

namespace {

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << content;
}

std::string read_input(const std::string& path) {
  std::ostringstream buf;
  if (path.empty() || path == "-") {
    buf << std::cin.rdbuf();
  } else {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open input file: " + path);
    buf << in.rdbuf();
  }
  return buf.str();
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string piece = nst::detail::trim(
        text.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!piece.empty()) out.push_back(nst::detail::parse_decimal(piece));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

const char* kRunColumns =
    "Experiment data columns:\n"
    "  growth-law        shapes.csv: shape,count,probability,z\n"
    "  coupling-equality equality.csv: replica,seed,equal\n"
    "  crp-compare       counts.csv: value,chain_count,crp_count,crp_repeat_count\n"
    "                    summary.csv: metric,value\n"
    "  moment-identities identities.csv: identity,p,analytic,estimate,stderr,z\n"
    "  frag-profile      profile.csv: replica,threshold,fragment_rank,mass\n"
    "  malthus           slopes.csv: replica,slope; summary.csv: metric,value\n"
    "  distance-scaling  distances.csv: replica,checkpoint,distance,scaled\n"
    "                    summary.csv: checkpoint,mean_scaled,stderr\n"
    "JSON output mirrors each CSV as an array of objects.\n"
    "Every run writes manifest.json with the config echo, per-replica seeds\n"
    "and a digest per data file; reruns with the same seed are byte-identical\n"
    "for any --workers value.";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nested stable tree laboratory"};
  app.require_subcommand(1);
  app.footer(kRunColumns);

  // grow
  double g_alpha = 1.5;
  std::uint32_t g_n = 100;
  std::uint64_t g_seed = 0, g_replica = 0;
  std::string g_out;
  auto* grow_cmd = app.add_subcommand(
      "grow", "grow one weighted random tree and print it as a JSON document");
  grow_cmd->add_option("--alpha", g_alpha, "growth parameter in (1,2]")->required();
  grow_cmd->add_option("--n", g_n, "number of growth steps (final leaf count is n+1)")
      ->required();
  grow_cmd->add_option("--seed", g_seed, "master seed")->required();
  grow_cmd->add_option("--replica", g_replica, "replica index folded into the seed");
  grow_cmd->add_option("--out", g_out, "output file, '-' or absent for stdout");

  // couple
  double c_alpha = 1.5, c_alpha_prime = 2.0;
  std::uint32_t c_n = 100;
  std::uint64_t c_seed = 0, c_replica = 0;
  std::string c_out;
  auto* couple_cmd = app.add_subcommand(
      "couple", "run the two-color coupled chain and print the colored document");
  couple_cmd->add_option("--alpha", c_alpha, "growth parameter in (1,2]")->required();
  couple_cmd->add_option("--alpha-prime", c_alpha_prime, "pruning parameter in (alpha,2]")
      ->required();
  couple_cmd->add_option("--n", c_n, "number of growth steps")->required();
  couple_cmd->add_option("--seed", c_seed, "master seed")->required();
  couple_cmd->add_option("--replica", c_replica, "replica index folded into the seed");
  couple_cmd->add_option("--out", c_out, "output file, '-' or absent for stdout");

  // prune
  std::string p_in, p_out;
  double p_alpha_prime = 2.0;
  std::uint64_t p_seed = 0, p_replica = 0;
  std::uint32_t p_k = 0;
  auto* prune_cmd = app.add_subcommand(
      "prune",
      "prune a serialized tree over its first k+1 leaves; with the seed used to "
      "grow it this reproduces `couple` byte for byte");
  prune_cmd->add_option("--in", p_in, "tree document, '-' or absent for stdin");
  prune_cmd->add_option("--alpha-prime", p_alpha_prime, "pruning parameter in (alpha,2]")
      ->required();
  prune_cmd->add_option("--seed", p_seed, "master seed of the shared U stream")->required();
  prune_cmd->add_option("--replica", p_replica, "replica index folded into the seed");
  prune_cmd->add_option("--k", p_k, "leaf prefix to prune over (default: every leaf)");
  prune_cmd->add_option("--out", p_out, "output file, '-' or absent for stdout");

  // frag
  double f_alpha = 1.5;
  std::uint32_t f_n = 300;
  std::uint64_t f_seed = 0, f_replica = 0;
  std::string f_thresholds = "0,0.25,0.5,0.75,1,1.5,2";
  std::string f_format = "csv", f_out;
  auto* frag_cmd = app.add_subcommand(
      "frag", "height-fragmentation profile of one grown tree "
              "(columns: threshold,fragment_rank,mass)");
  frag_cmd->add_option("--alpha", f_alpha, "growth parameter in (1,2]")->required();
  frag_cmd->add_option("--n", f_n, "number of growth steps")->required();
  frag_cmd->add_option("--seed", f_seed, "master seed")->required();
  frag_cmd->add_option("--replica", f_replica, "replica index folded into the seed");
  frag_cmd->add_option("--thresholds", f_thresholds,
                       "comma-separated height thresholds in units of n^(1-1/alpha)");
  frag_cmd->add_option("--format", f_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  frag_cmd->add_option("--out", f_out, "output file, '-' or absent for stdout");

  // verify
  std::string v_out = "acceptance_out";
  unsigned v_workers = nst::default_workers();
  auto* verify_cmd = app.add_subcommand(
      "verify", "run the full acceptance battery; exit 0 only if all 14 criteria pass");
  verify_cmd->add_option("--out", v_out, "directory for the determinism-check artifacts");
  verify_cmd->add_option("--workers", v_workers, "worker threads (outputs do not depend on it)");

  // run
  std::string r_config;
  std::string r_experiment, r_alpha, r_alpha_prime, r_n, r_replicas, r_checkpoints, r_seed,
      r_out, r_format;
  unsigned r_workers = nst::default_workers();
  auto* run_cmd = app.add_subcommand(
      "run", "run a named experiment from a config file and/or flags "
             "(flags override file values)");
  run_cmd->add_option("--config", r_config, "key=value config file");
  run_cmd->add_option("--experiment", r_experiment,
                      "growth-law | coupling-equality | crp-compare | moment-identities | "
                      "frag-profile | malthus | distance-scaling");
  run_cmd->add_option("--alpha", r_alpha, "growth parameter in (1,2]");
  run_cmd->add_option("--alpha-prime", r_alpha_prime, "pruning parameter in (alpha,2]");
  run_cmd->add_option("--n", r_n, "size parameter (0 picks the experiment's default)");
  run_cmd->add_option("--replicas", r_replicas, "number of independent replicas");
  run_cmd->add_option("--checkpoints", r_checkpoints, "comma-separated checkpoint list");
  run_cmd->add_option("--seed", r_seed, "master seed (required somewhere: file or flag)");
  run_cmd->add_option("--out", r_out, "output directory");
  run_cmd->add_option("--format", r_format, "csv or json");
  run_cmd->add_option("--workers", r_workers, "worker threads (outputs do not depend on it)");

  try {
    app.parse(argc, argv);

    if (grow_cmd->parsed()) {
      auto t = nst::grow(g_alpha, g_n, g_seed, g_replica);
      t.finalize();
      write_output(g_out, nst::serialize(t));
      return 0;
    }

    if (couple_cmd->parsed()) {
      nst::CoupledChain chain(c_alpha, c_alpha_prime, c_n, c_seed, c_replica);
      chain.run_to(c_n);
      chain.state().finalize();
      chain.state().validate();
      write_output(c_out, nst::serialize(chain.state()));
      return 0;
    }

    if (prune_cmd->parsed()) {
      auto doc = nst::deserialize(read_input(p_in));
      auto& t = doc.tree;
      t.finalize();
      const std::uint32_t k = p_k == 0 ? t.step() : p_k;
      nst::RngStream u = nst::make_stream(p_seed, p_replica, nst::kULabel);
      const nst::AcceptanceTable table(t.alpha(), p_alpha_prime);
      const auto res = nst::prune(t, k, table, u);
      write_output(p_out, nst::serialize(nst::colored_from_prune(t, p_alpha_prime, res)));
      return 0;
    }

    if (frag_cmd->parsed()) {
      auto t = nst::grow(f_alpha, f_n, f_seed, f_replica);
      t.finalize();
      const auto thresholds = parse_double_list(f_thresholds);
      if (thresholds.empty()) throw std::invalid_argument("no thresholds given");
      const double scale = std::pow(static_cast<double>(f_n), 1.0 - 1.0 / f_alpha);
      const auto profile = nst::frag_profile(t, t.leaf_order()[0], thresholds, scale);
      nst::Table table;
      table.columns = {"threshold", "fragment_rank", "mass"};
      for (const auto& row : profile)
        for (std::size_t i = 0; i < row.masses.size(); ++i)
          table.add_row({row.threshold, i + 1, row.masses[i]});
      write_output(f_out, table.render(f_format));
      return 0;
    }

    if (verify_cmd->parsed()) {
      const auto results = nst::run_acceptance(v_workers, v_out, std::cout);
      const bool ok = nst::all_passed(results);
      std::cout << (ok ? "all 14 criteria passed\n" : "FAILURES present\n");
      return ok ? 0 : 1;
    }

    if (run_cmd->parsed()) {
      nst::ExperimentConfig cfg;
      if (!r_config.empty()) cfg = nst::load_config_file(r_config);
      if (run_cmd->count("--experiment")) nst::set_config_field(cfg, "experiment", r_experiment);
      if (run_cmd->count("--alpha")) nst::set_config_field(cfg, "alpha", r_alpha);
      if (run_cmd->count("--alpha-prime")) nst::set_config_field(cfg, "alpha_prime", r_alpha_prime);
      if (run_cmd->count("--n")) nst::set_config_field(cfg, "n", r_n);
      if (run_cmd->count("--replicas")) nst::set_config_field(cfg, "replicas", r_replicas);
      if (run_cmd->count("--checkpoints")) nst::set_config_field(cfg, "checkpoints", r_checkpoints);
      if (run_cmd->count("--seed")) nst::set_config_field(cfg, "seed", r_seed);
      if (run_cmd->count("--out")) nst::set_config_field(cfg, "out", r_out);
      if (run_cmd->count("--format")) nst::set_config_field(cfg, "format", r_format);
      const auto manifest = nst::run_experiment(cfg, r_workers);
      std::cout << cfg.experiment << ": " << manifest.file_digests.size()
                << " data file(s) in " << cfg.out << ", wall " << manifest.wall_seconds
                << " s, invariants " << (manifest.invariants_passed ? "passed" : "FAILED")
                << "\n";
      return manifest.invariants_passed ? 0 : 1;
    }

    return 2;  // unreachable with require_subcommand(1)
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
