#pragma once

#include <array>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nst/distributions.hpp"
#include "nst/fragmentation.hpp"
#include "nst/marchal.hpp"
#include "nst/parallel.hpp"
#include "nst/pruning.hpp"
#include "nst/serialize.hpp"
#include "nst/stats.hpp"

namespace nst {

inline constexpr std::string_view kArtifactVersion = "nst 0.1.0";

struct ExperimentConfig {
  std::string experiment;
  double alpha = 0.0;
  std::optional<double> alpha_prime;
  std::uint32_t n = 0;  // 0 lets the experiment pick its documented default
  std::uint32_t replicas = 1;
  std::vector<std::uint32_t> checkpoints;
  std::optional<std::uint64_t> seed;  // deliberately no wall-clock fallback
  std::string out = "out";
  std::string format = "csv";

  void validate() const {
    if (experiment.empty()) throw std::invalid_argument("config: experiment name missing");
    if (!(alpha > 1.0) || !(alpha <= 2.0)) throw std::invalid_argument("config: alpha outside (1,2]");
    if (alpha_prime && (!(*alpha_prime > alpha) || !(*alpha_prime <= 2.0)))
      throw std::invalid_argument("config: alpha_prime outside (alpha,2]");
    if (replicas < 1) throw std::invalid_argument("config: replicas must be >= 1");
    if (!seed) throw std::invalid_argument("config: seed missing");
    if (format != "csv" && format != "json")
      throw std::invalid_argument("config: format must be csv or json");
    for (std::size_t i = 1; i < checkpoints.size(); ++i)
      if (checkpoints[i] <= checkpoints[i - 1])
        throw std::invalid_argument("config: checkpoints must be strictly increasing");
  }
};

namespace detail {

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out = "0x";
  for (int shift = 60; shift >= 0; shift -= 4) out += digits[(v >> shift) & 0xF];
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

template <typename Int>
Int parse_int(std::string_view text, const char* what) {
  Int value{};
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw std::invalid_argument(std::string("config: bad integer for ") + what);
  return value;
}

inline std::vector<std::uint32_t> parse_u32_list(std::string_view text) {
  std::vector<std::uint32_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string_view piece =
        text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                           : comma - start);
    const std::string item = trim(piece);
    if (!item.empty()) out.push_back(parse_int<std::uint32_t>(item, "checkpoints"));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

// One key=value assignment, shared by the file loader and CLI overrides.
inline void set_config_field(ExperimentConfig& cfg, std::string_view key,
                             std::string_view raw_value) {
  const std::string value = detail::trim(raw_value);
  if (key == "experiment") {
    cfg.experiment = value;
  } else if (key == "alpha") {
    cfg.alpha = detail::parse_decimal(value);
  } else if (key == "alpha_prime") {
    cfg.alpha_prime = detail::parse_decimal(value);
  } else if (key == "n") {
    cfg.n = detail::parse_int<std::uint32_t>(value, "n");
  } else if (key == "replicas") {
    cfg.replicas = detail::parse_int<std::uint32_t>(value, "replicas");
  } else if (key == "checkpoints") {
    cfg.checkpoints = detail::parse_u32_list(value);
  } else if (key == "seed") {
    cfg.seed = detail::parse_int<std::uint64_t>(value, "seed");
  } else if (key == "out") {
    cfg.out = value;
  } else if (key == "format") {
    cfg.format = value;
  } else {
    throw std::invalid_argument("config: unknown key '" + std::string(key) + "'");
  }
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::string stripped = detail::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key=value, got '" + stripped + "'");
    set_config_field(cfg, detail::trim(stripped.substr(0, eq)), stripped.substr(eq + 1));
  }
  return cfg;
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

// Rows carry typed cells so one table renders both ways; JSON objects mirror
// the CSV rows (keys end up alphabetical, values identical).
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;

  void add_row(std::vector<nlohmann::json> cells) {
    if (cells.size() != columns.size()) throw std::logic_error("row width mismatch");
    rows.push_back(std::move(cells));
  }

  std::string to_csv() const {
    std::string out;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out += ',';
      out += columns[c];
    }
    out += '\n';
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out += ',';
        out += row[c].is_string() ? row[c].get<std::string>() : row[c].dump();
      }
      out += '\n';
    }
    return out;
  }

  std::string to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : rows) {
      nlohmann::json obj = nlohmann::json::object();
      for (std::size_t c = 0; c < row.size(); ++c) obj[columns[c]] = row[c];
      arr.push_back(std::move(obj));
    }
    return arr.dump() + "\n";
  }

  std::string render(const std::string& format) const {
    return format == "json" ? to_json() : to_csv();
  }
};

struct RunManifest {
  ExperimentConfig config;
  std::string version;
  std::vector<std::uint64_t> replica_seeds;
  double wall_seconds = 0.0;
  std::map<std::string, std::string> file_digests;  // emitted data files only
  bool invariants_passed = false;

  std::string to_json() const {
    nlohmann::json cfg;
    cfg["experiment"] = config.experiment;
    cfg["alpha"] = detail::shortest_decimal(config.alpha);
    cfg["alpha_prime"] =
        config.alpha_prime ? nlohmann::json(detail::shortest_decimal(*config.alpha_prime))
                           : nlohmann::json(nullptr);
    cfg["n"] = config.n;
    cfg["replicas"] = config.replicas;
    cfg["checkpoints"] = config.checkpoints;
    cfg["seed"] = config.seed ? detail::hex64(*config.seed) : "";
    cfg["out"] = config.out;
    cfg["format"] = config.format;

    nlohmann::json doc;
    doc["config"] = std::move(cfg);
    doc["version"] = version;
    nlohmann::json seeds = nlohmann::json::array();
    for (std::uint64_t s : replica_seeds) seeds.push_back(detail::hex64(s));
    doc["replica_seeds"] = std::move(seeds);
    doc["wall_seconds"] = wall_seconds;
    doc["files"] = file_digests;
    doc["invariants_passed"] = invariants_passed;
    return doc.dump(2) + "\n";
  }
};

namespace detail {

struct ExperimentResult {
  std::vector<std::pair<std::string, Table>> tables;  // base name -> table
  bool passed = true;
};

inline std::uint32_t default_n(const ExperimentConfig& cfg) {
  if (cfg.n > 0) return cfg.n;
  if (cfg.experiment == "growth-law") return 4;
  if (cfg.experiment == "coupling-equality") return 200;
  if (cfg.experiment == "crp-compare") return 50;
  if (cfg.experiment == "frag-profile") return 300;
  if (cfg.experiment == "malthus") return 20000;
  if (cfg.experiment == "distance-scaling") return 100000;
  return 0;
}

inline double require_alpha_prime(const ExperimentConfig& cfg) {
  if (!cfg.alpha_prime)
    throw std::invalid_argument("experiment '" + cfg.experiment + "' needs alpha_prime");
  return *cfg.alpha_prime;
}

inline ExperimentResult run_growth_law(const ExperimentConfig& cfg, unsigned workers) {
  const std::uint32_t leaves = default_n(cfg);
  if (leaves < 3 || leaves > 6)
    throw std::invalid_argument("growth-law: n is the leaf count, supported range 3..6");
  auto codes = parallel_map(cfg.replicas, workers, [&](std::size_t r) {
    auto t = grow(cfg.alpha, leaves - 1, *cfg.seed, r);
    t.finalize();
    return shape_of(t).code;
  });
  std::map<std::string, std::uint64_t> counts;
  for (const auto& c : codes) ++counts[c];

  Table table;
  table.columns = {"shape", "count", "probability", "z"};
  double prob_sum = 0.0;
  std::uint64_t total = 0;
  for (const auto& shape : enumerate_labeled_shapes(leaves)) {
    const double prob = tree_probability(shape, cfg.alpha);
    const auto it = counts.find(shape.code);
    const std::uint64_t count = it == counts.end() ? 0 : it->second;
    const double sd = std::sqrt(static_cast<double>(cfg.replicas) * prob * (1.0 - prob));
    const double z = sd > 0.0 ? (static_cast<double>(count) - cfg.replicas * prob) / sd
                              : static_cast<double>(count);
    table.add_row({shape.code, count, prob, z});
    prob_sum += prob;
    total += count;
  }
  ExperimentResult out;
  out.passed = std::abs(prob_sum - 1.0) < 1e-12 && total == cfg.replicas;
  out.tables.emplace_back("shapes", std::move(table));
  return out;
}

inline ExperimentResult run_coupling_equality(const ExperimentConfig& cfg, unsigned workers) {
  const double ap = require_alpha_prime(cfg);
  const std::uint32_t n = default_n(cfg);
  // uint8 because parallel writes into vector<bool> would share bytes
  auto equal = parallel_map(cfg.replicas, workers, [&](std::size_t r) {
    return static_cast<std::uint8_t>(coupling_equality_check(cfg.alpha, ap, n, *cfg.seed, r));
  });
  Table table;
  table.columns = {"replica", "seed", "equal"};
  bool all = true;
  for (std::size_t r = 0; r < equal.size(); ++r) {
    table.add_row({r, hex64(derive_seed(*cfg.seed, r, kULabel)), equal[r] != 0});
    all = all && equal[r] != 0;
  }
  ExperimentResult out;
  out.passed = all;
  out.tables.emplace_back("equality", std::move(table));
  return out;
}

inline ExperimentResult run_crp_compare(const ExperimentConfig& cfg, unsigned workers) {
  const double ap = require_alpha_prime(cfg);
  const std::uint32_t customers = default_n(cfg);
  const double ab = 1.0 - 1.0 / cfg.alpha;
  const double abp = 1.0 - 1.0 / ap;

  auto chain = parallel_map(cfg.replicas, workers, [&](std::size_t r) {
    CoupledChain c(cfg.alpha, ap, customers + 1, *cfg.seed, r);
    c.run_to(customers + 1);
    return static_cast<std::uint32_t>(c.state().L() - 1);
  });
  auto crp = parallel_map(cfg.replicas, workers, [&](std::size_t r) {
    RngStream rng(derive_seed(*cfg.seed, r, "crp"), "crp");
    return crp_tables(ab / abp, ab, customers, rng);
  });
  auto floor_draws = parallel_map(cfg.replicas, workers, [&](std::size_t r) {
    RngStream rng(derive_seed(*cfg.seed, r, "crp-floor"), "crp-floor");
    return crp_tables(ab / abp, ab, customers, rng);
  });

  const auto cross = compare_distributions(chain, crp);
  const auto floor = compare_distributions(crp, floor_draws);

  Table counts;
  counts.columns = {"value", "chain_count", "crp_count", "crp_repeat_count"};
  std::map<std::uint32_t, std::array<std::uint64_t, 3>> merged;
  for (const auto& row : cross.rows) {
    merged[row.value][0] = row.count_a;
    merged[row.value][1] = row.count_b;
  }
  for (const auto& row : floor.rows) merged[row.value][2] = row.count_b;
  for (const auto& [value, cs] : merged) counts.add_row({value, cs[0], cs[1], cs[2]});

  Table summary;
  summary.columns = {"metric", "value"};
  summary.add_row({"tv_chain_vs_crp", cross.tv});
  summary.add_row({"tv_crp_vs_crp_repeat", floor.tv});
  summary.add_row({"samples_per_side", cfg.replicas});

  ExperimentResult out;
  out.passed = chain.size() == cfg.replicas && crp.size() == cfg.replicas;
  out.tables.emplace_back("counts", std::move(counts));
  out.tables.emplace_back("summary", std::move(summary));
  return out;
}

inline ExperimentResult run_moment_identities(const ExperimentConfig& cfg, unsigned) {
  const double ap = require_alpha_prime(cfg);
  std::vector<double> grid;
  for (int i = 1; i <= 20; ++i) grid.push_back(0.5 * i);
  const auto reports = identity_suite(cfg.alpha, ap, grid);
  Table table;
  table.columns = {"identity", "p", "analytic", "estimate", "stderr", "z"};
  for (const auto& r : reports)
    table.add_row({r.label, r.p, r.analytic, r.estimate, r.stderr_, r.z});
  ExperimentResult out;
  out.passed = max_abs_z(reports) < 1e-10;
  out.tables.emplace_back("identities", std::move(table));
  return out;
}

inline ExperimentResult run_frag_profile(const ExperimentConfig& cfg, unsigned workers) {
  const std::uint32_t n = default_n(cfg);
  // integer checkpoints give thresholds in hundredths of the height scale
  std::vector<double> thresholds;
  if (cfg.checkpoints.empty()) {
    thresholds = {0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0};
  } else {
    for (std::uint32_t c : cfg.checkpoints) thresholds.push_back(c / 100.0);
  }
  const double scale = std::pow(static_cast<double>(n), 1.0 - 1.0 / cfg.alpha);

  auto profiles = parallel_map(cfg.replicas, workers, [&](std::size_t r) {
    auto t = grow(cfg.alpha, n, *cfg.seed, r);
    t.finalize();
    return frag_profile(t, t.leaf_order()[0], thresholds, scale);
  });

  Table table;
  table.columns = {"replica", "threshold", "fragment_rank", "mass"};
  bool ok = true;
  const double full = static_cast<double>(n) / (static_cast<double>(n) + 1.0);
  for (std::size_t r = 0; r < profiles.size(); ++r) {
    double prev_total = 2.0;
    for (const auto& row : profiles[r]) {
      const double total = row.masses.total();
      if (row.threshold == 0.0 && total != full) ok = false;
      if (total > prev_total + 1e-15) ok = false;
      prev_total = total;
      for (std::size_t rank = 0; rank < row.masses.size(); ++rank)
        table.add_row({r, row.threshold, rank + 1, row.masses.values()[rank]});
    }
  }
  ExperimentResult out;
  out.passed = ok;
  out.tables.emplace_back("profile", std::move(table));
  return out;
}

inline ExperimentResult run_malthus(const ExperimentConfig& cfg, unsigned workers) {
  const double ap = require_alpha_prime(cfg);
  const std::uint32_t n = default_n(cfg);
  if (cfg.replicas < 2) throw std::invalid_argument("malthus: need replicas >= 2");
  std::vector<std::uint32_t> checkpoints = cfg.checkpoints;
  if (checkpoints.empty()) {
    if (n < 2000) throw std::invalid_argument("malthus: need n >= 2000");
    checkpoints = geometric_checkpoints(1000, n, 12);
  } else if (checkpoints.size() < 2) {
    throw std::invalid_argument("malthus: need >= 2 checkpoints");
  }

  auto slopes = parallel_map(cfg.replicas, workers, [&](std::size_t r) {
    return malthus_slope(cfg.alpha, ap, checkpoints, *cfg.seed, r);
  });

  Table data;
  data.columns = {"replica", "slope"};
  for (std::size_t r = 0; r < slopes.size(); ++r) data.add_row({r, slopes[r]});

  const auto ms = mean_stderr(slopes);
  Table summary;
  summary.columns = {"alpha", "alpha_prime", "target", "mean_slope", "slope_sd", "stderr",
                     "replicas"};
  const double target = (1.0 - 1.0 / cfg.alpha) / (1.0 - 1.0 / ap);
  summary.add_row({cfg.alpha, ap, target, ms.mean,
                   ms.stderr_ * std::sqrt(static_cast<double>(slopes.size())), ms.stderr_,
                   slopes.size()});

  ExperimentResult out;
  out.passed = std::isfinite(ms.mean);
  out.tables.emplace_back("slopes", std::move(data));
  out.tables.emplace_back("summary", std::move(summary));
  return out;
}

inline ExperimentResult run_distance_scaling(const ExperimentConfig& cfg, unsigned workers) {
  const std::uint32_t n = default_n(cfg);
  std::vector<std::uint32_t> checkpoints = cfg.checkpoints;
  if (checkpoints.empty())
    checkpoints = {n / 100, n / 25, n / 10, (2 * n) / 5, n};
  const double ab = 1.0 - 1.0 / cfg.alpha;

  auto traces = parallel_map(cfg.replicas, workers, [&](std::size_t r) {
    return endpoint_distance_trace(cfg.alpha, checkpoints, *cfg.seed, r);
  });

  Table data;
  data.columns = {"replica", "checkpoint", "distance", "scaled"};
  std::vector<std::vector<double>> scaled(checkpoints.size());
  for (std::size_t r = 0; r < traces.size(); ++r) {
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      const double s = static_cast<double>(traces[r][c]) /
                       (cfg.alpha * std::pow(static_cast<double>(checkpoints[c]), ab));
      data.add_row({r, checkpoints[c], traces[r][c], s});
      scaled[c].push_back(s);
    }
  }

  Table summary;
  summary.columns = {"checkpoint", "mean_scaled", "stderr"};
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    const auto ms = mean_stderr(scaled[c]);
    summary.add_row({checkpoints[c], ms.mean, ms.stderr_});
  }

  ExperimentResult out;
  out.passed = traces.size() == cfg.replicas;
  out.tables.emplace_back("distances", std::move(data));
  out.tables.emplace_back("summary", std::move(summary));
  return out;
}

}  // namespace detail

inline RunManifest run_experiment(const ExperimentConfig& cfg,
                                  unsigned workers = default_workers()) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();

  detail::ExperimentResult result;
  if (cfg.experiment == "growth-law") {
    result = detail::run_growth_law(cfg, workers);
  } else if (cfg.experiment == "coupling-equality") {
    result = detail::run_coupling_equality(cfg, workers);
  } else if (cfg.experiment == "crp-compare") {
    result = detail::run_crp_compare(cfg, workers);
  } else if (cfg.experiment == "moment-identities") {
    result = detail::run_moment_identities(cfg, workers);
  } else if (cfg.experiment == "frag-profile") {
    result = detail::run_frag_profile(cfg, workers);
  } else if (cfg.experiment == "malthus") {
    result = detail::run_malthus(cfg, workers);
  } else if (cfg.experiment == "distance-scaling") {
    result = detail::run_distance_scaling(cfg, workers);
  } else {
    throw std::invalid_argument("unknown experiment: " + cfg.experiment);
  }

  RunManifest manifest;
  manifest.config = cfg;
  manifest.version = std::string(kArtifactVersion);
  manifest.replica_seeds.reserve(cfg.replicas);
  for (std::uint32_t r = 0; r < cfg.replicas; ++r)
    manifest.replica_seeds.push_back(derive_seed(*cfg.seed, r, kSelectLabel));
  manifest.invariants_passed = result.passed;

  const std::filesystem::path dir(cfg.out);
  std::filesystem::create_directories(dir);
  for (const auto& [name, table] : result.tables) {
    const std::string content = table.render(cfg.format);
    const std::string filename = name + "." + cfg.format;
    std::ofstream file(dir / filename, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + (dir / filename).string());
    file << content;
    manifest.file_digests[filename] = detail::hex64(fnv1a64(content));
  }

  manifest.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream mf(dir / "manifest.json", std::ios::binary);
  if (!mf) throw std::runtime_error("cannot write manifest");
  mf << manifest.to_json();
  return manifest;
}

}  // namespace nst
