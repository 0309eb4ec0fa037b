#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "mrregger/estimators.hpp"
#include "mrregger/ingestion.hpp"
#include "mrregger/report.hpp"
#include "mrregger/selection.hpp"
#include "mrregger/simulation.hpp"
#include "mrregger/version.hpp"

namespace mrregger::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << content;
  if (!out) throw InputError("write failed for " + path.string());
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

std::string command_line(const std::vector<std::string>& args) {
  std::string line = "mrregger";
  for (const auto& a : args) line += ' ' + a;
  return line;
}

void write_manifest(const fs::path& dir, const std::vector<std::string>& args, json config,
                    std::uint64_t seed, const std::vector<std::string>& inputs) {
  json m;
  m["schema"] = kSchemaVersion;
  m["version"] = kVersion;
  m["command_line"] = command_line(args);
  m["seed"] = seed;
  m["config"] = std::move(config);
  json digests = json::array();
  for (const auto& path : inputs) digests.push_back({{"path", path}, {"sha256", sha256_file(path)}});
  m["inputs"] = digests;
  write_file(dir / "manifest.json", m.dump(2) + '\n');
}

json log_json(const ingest::HarmonizationLog& log) {
  return {{"input", log.input},
          {"kept", log.kept},
          {"dropped_missing", log.dropped_missing},
          {"dropped_maf", log.dropped_maf},
          {"dropped_region", log.dropped_region},
          {"dropped_whitelist", log.dropped_whitelist},
          {"dropped_unmatched", log.dropped_unmatched},
          {"dropped_mismatch", log.dropped_mismatch},
          {"dropped_ambiguous", log.dropped_ambiguous},
          {"flipped", log.flipped}};
}

ingest::Region parse_region(const std::string& text) {
  // chrom:start-end
  const auto colon = text.find(':');
  const auto dash = text.find('-', colon == std::string::npos ? 0 : colon);
  if (colon == std::string::npos || dash == std::string::npos) {
    throw InputError("region must look like chrom:start-end, got " + text);
  }
  ingest::Region r;
  r.chrom = ingest::normalize_chrom(text.substr(0, colon));
  try {
    r.start = std::stoll(text.substr(colon + 1, dash - colon - 1));
    r.end = std::stoll(text.substr(dash + 1));
  } catch (const std::exception&) {
    throw InputError("region bounds must be integers, got " + text);
  }
  if (r.end < r.start) throw InputError("region end precedes start: " + text);
  return r;
}

unsigned resolve_threads(std::optional<unsigned> flag) {
  if (flag) return std::max(1u, *flag);
  if (const char* env = std::getenv("MRREGGER_THREADS")) {
    try {
      const long n = std::stol(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
    throw InputError(std::string("MRREGGER_THREADS must be a positive integer, got ") + env);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> methods;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      const Method m = parse_method(item);
      if (std::find(methods.begin(), methods.end(), m) == methods.end()) methods.push_back(m);
    } catch (const Error& e) {
      throw InputError(e.what());
    }
  }
  if (methods.empty()) throw InputError("no methods requested");
  return methods;
}

std::string all_methods_list() {
  std::string s;
  for (Method m : kAllMethods) s += (s.empty() ? "" : ",") + std::string(method_name(m));
  return s;
}

// ---- harmonize ----

struct HarmonizeArgs {
  std::string exposure, outcome, out;
  double maf{0.01};
  double palindrome{0.08};
  std::vector<std::string> regions;
  bool no_region_filter{false};
  std::string whitelist;
  std::string format_config;
  ingest::FormatSpec format;
  std::string chrom_col, pos_col;
};

void load_format_config(const std::string& path, ingest::FormatSpec& f) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read format config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("invalid format config: " + std::string(e.what()));
  }
  auto take = [&](const char* key, std::string& field) {
    if (j.contains(key)) field = j.at(key).get<std::string>();
  };
  take("snp", f.snp);
  take("effect_allele", f.effect_allele);
  take("other_allele", f.other_allele);
  take("eaf", f.eaf);
  take("beta", f.beta);
  take("se", f.se);
  take("pval", f.pval);
  if (j.contains("chrom")) f.chrom = j.at("chrom").get<std::string>();
  if (j.contains("pos")) f.pos = j.at("pos").get<std::string>();
}

std::pair<std::vector<ingest::RawGwasRecord>, json> load_side(
    const std::string& path, const HarmonizeArgs& a, const std::vector<ingest::Region>& regions,
    const std::optional<std::unordered_set<std::string>>& whitelist, std::ostream& err) {
  auto parsed = ingest::parse_gwas(path, a.format);
  for (std::size_t i = 0; i < parsed.errors.size() && i < 5; ++i) {
    err << "warning: " << path << ":" << parsed.errors[i].line << ": " << parsed.errors[i].message << '\n';
  }
  if (parsed.errors.size() > 5) err << "warning: " << parsed.errors.size() - 5 << " more malformed rows\n";
  auto [kept, log] = ingest::qc_filter(parsed.records, a.maf, regions);
  log.input = parsed.records.size() + parsed.missing;
  log.dropped_missing = parsed.missing;
  if (whitelist) {
    const auto before = kept.size();
    kept = ingest::filter_whitelist(kept, *whitelist);
    log.dropped_whitelist = before - kept.size();
  }
  log.kept = kept.size();
  json j = log_json(log);
  j["malformed_rows"] = parsed.errors.size();
  return {std::move(kept), std::move(j)};
}

int cmd_harmonize(const HarmonizeArgs& a, const std::vector<std::string>& args, std::ostream& out,
                  std::ostream& err) {
  HarmonizeArgs cfg = a;
  if (!cfg.format_config.empty()) load_format_config(cfg.format_config, cfg.format);
  if (!cfg.chrom_col.empty()) cfg.format.chrom = cfg.chrom_col;
  if (!cfg.pos_col.empty()) cfg.format.pos = cfg.pos_col;
  if (!(cfg.maf >= 0 && cfg.maf < 0.5)) throw InputError("--maf must lie in [0, 0.5)");
  if (!(cfg.palindrome >= 0 && cfg.palindrome < 0.5)) {
    throw InputError("--palindrome-threshold must lie in [0, 0.5)");
  }
  std::vector<ingest::Region> regions;
  if (!cfg.no_region_filter) regions.push_back(ingest::mhc_region());
  for (const auto& r : cfg.regions) regions.push_back(parse_region(r));
  std::optional<std::unordered_set<std::string>> whitelist;
  if (!cfg.whitelist.empty()) whitelist = ingest::load_snp_whitelist(cfg.whitelist);

  auto [exposure, exposure_log] = load_side(cfg.exposure, cfg, regions, whitelist, err);
  auto [outcome, outcome_log] = load_side(cfg.outcome, cfg, regions, whitelist, err);
  auto [harmonized, join_log] =
      ingest::harmonize(exposure, outcome, ingest::HarmonizeOptions{cfg.palindrome});

  const auto dir = prepare_dir(cfg.out);
  ingest::write_harmonized_tsv((dir / "harmonized.tsv").string(), harmonized);
  json log;
  log["schema"] = kSchemaVersion;
  log["exposure"] = exposure_log;
  log["outcome"] = outcome_log;
  log["join"] = log_json(join_log);
  write_file(dir / "harmonization_log.json", log.dump(2) + '\n');

  json config;
  config["maf_min"] = cfg.maf;
  config["palindrome_threshold"] = cfg.palindrome;
  json region_list = json::array();
  for (const auto& r : regions) {
    region_list.push_back(r.chrom + ":" + std::to_string(r.start) + "-" + std::to_string(r.end));
  }
  config["exclude_regions"] = region_list;
  config["whitelist"] = cfg.whitelist.empty() ? json(nullptr) : json(cfg.whitelist);
  config["columns"] = {{"snp", cfg.format.snp},
                       {"effect_allele", cfg.format.effect_allele},
                       {"other_allele", cfg.format.other_allele},
                       {"eaf", cfg.format.eaf},
                       {"beta", cfg.format.beta},
                       {"se", cfg.format.se},
                       {"pval", cfg.format.pval}};
  std::vector<std::string> inputs{cfg.exposure, cfg.outcome};
  if (!cfg.whitelist.empty()) inputs.push_back(cfg.whitelist);
  if (!cfg.format_config.empty()) inputs.push_back(cfg.format_config);
  write_manifest(dir, args, config, 0, inputs);

  out << "harmonized " << harmonized.data.size() << " instruments (" << join_log.flipped
      << " reoriented) -> " << (dir / "harmonized.tsv").string() << '\n';
  return kExitOk;
}

// ---- estimate ----

struct EstimateArgs {
  std::string input, out;
  std::string methods;
  double pthreshold{kDefaultRandomPThreshold};
  double eta{kDefaultEta};
  std::uint64_t seed{1};
  double fixed_pthreshold{5e-8};
  bool no_select{false};
};

int cmd_estimate(const EstimateArgs& a, const std::vector<std::string>& args, std::ostream& out,
                 std::ostream& err) {
  const auto methods = parse_methods(a.methods);
  const double lambda = pvalue_to_lambda(a.pthreshold);
  const double fixed_lambda = a.no_select ? 0.0 : pvalue_to_lambda(a.fixed_pthreshold);
  SelectionConfig sel_cfg{lambda, a.eta, a.seed};
  sel_cfg.validate();
  const auto data = ingest::read_harmonized_tsv(a.input).data;

  json results = json::array();
  std::string tsv = estimate_tsv_header();
  std::size_t failures = 0;
  std::optional<Selection> selection;
  for (Method m : methods) {
    try {
      EstimateReport report;
      if (uses_random_selection(m)) {
        if (!selection) selection = select_random(data, sel_cfg);
        report = m == Method::kRivw ? rivw(*selection) : regger(*selection);
      } else {
        const auto used = select_fixed(data, fixed_lambda);
        switch (m) {
          case Method::kIvw: report = ivw(used); break;
          case Method::kDivw: report = divw(used); break;
          case Method::kEgger: report = egger(used); break;
          default: report = degger(used); break;
        }
      }
      json r = to_json(report);
      r["status"] = "ok";
      results.push_back(std::move(r));
      tsv += to_tsv_row(report);
      out << to_key_value(report) << '\n';
      for (const auto& w : report.warnings) err << "warning: " << method_name(m) << ": " << w << '\n';
    } catch (const Error& e) {
      ++failures;
      results.push_back({{"method", std::string(method_name(m))}, {"status", "failed"}, {"error", e.what()}});
      err << "error: " << method_name(m) << ": " << e.what() << '\n';
    }
  }

  json selection_json = {{"pthreshold", a.pthreshold},
                         {"lambda", lambda},
                         {"eta", a.eta},
                         {"seed", a.seed},
                         {"fixed_pthreshold", a.no_select ? json(nullptr) : json(a.fixed_pthreshold)},
                         {"fixed_lambda", fixed_lambda},
                         {"no_select", a.no_select}};
  json doc;
  doc["schema"] = kSchemaVersion;
  doc["n_snps"] = data.size();
  doc["selection"] = selection_json;
  doc["results"] = results;

  if (!a.out.empty()) {
    const auto dir = prepare_dir(a.out);
    write_file(dir / "report.json", doc.dump(2) + '\n');
    write_file(dir / "report.tsv", tsv);
    json config = selection_json;
    json names = json::array();
    for (Method m : methods) names.push_back(std::string(method_name(m)));
    config["methods"] = names;
    write_manifest(dir, args, config, a.seed, {a.input});
  }
  return failures == methods.size() ? kExitPartial : kExitOk;
}

// ---- diagnose ----

struct DiagnoseArgs {
  std::string input;
  double pthreshold{kDefaultRandomPThreshold};
  double eta{kDefaultEta};
  std::uint64_t seed{1};
};

int cmd_diagnose(const DiagnoseArgs& a, std::ostream& out, std::ostream& err) {
  const auto data = ingest::read_harmonized_tsv(a.input).data;
  const double lambda = pvalue_to_lambda(a.pthreshold);
  out << "n_snps=" << data.size() << '\n';
  auto attempt = [&](const char* what, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      err << "warning: " << what << ": " << e.what() << '\n';
    }
  };
  std::string kappa = "NA", psi = "NA", ess = "NA", n_sel = "NA", ratio = "NA";
  attempt("strength", [&] {
    const auto s = strength_diagnostics(data.gamma_hat(), data.sigma_x());
    kappa = format_number(s.kappa);
    psi = format_number(s.psi);
  });
  attempt("selection", [&] {
    const auto sel = select_random(data, SelectionConfig{lambda, a.eta, a.seed});
    n_sel = std::to_string(sel.size());
    ess = format_number(post_selection_diagnostics(sel, lambda).ess_rb);
  });
  attempt("attenuation", [&] { ratio = format_number(attenuation_diagnostics(data).ratio); });
  out << "kappa=" << kappa << '\n'
      << "psi=" << psi << '\n'
      << "lambda=" << format_number(lambda) << '\n'
      << "n_selected=" << n_sel << '\n'
      << "ess_rb=" << ess << '\n'
      << "i2_gx=" << format_number(detail::i2_gx(data.gamma_hat(), data.sigma_x())) << '\n'
      << "attenuation_ratio=" << ratio << '\n';
  return kExitOk;
}

// ---- simulate ----

struct SimulateArgs {
  std::string preset;
  std::string config;
  std::string out;
  bool paper_scale{false};
  std::optional<std::int64_t> p, reps;
  std::optional<double> n_x, n_y, beta, mu_gamma, mu_alpha, eps_alpha_sq, pi1, pi2, pi3, flip;
  std::vector<double> pi_sweep, eps_sweep;
  std::optional<std::uint64_t> seed;
  std::string methods;
  double pthreshold{kDefaultRandomPThreshold};
  double eta{kDefaultEta};
  double fixed_pthreshold{5e-8};
  std::optional<unsigned> threads;
};

struct SimPlan {
  sim::SimConfig base;
  std::vector<double> pi_sweep;   // each value sets pi1 = pi2 = pi3
  std::vector<double> eps_sweep;  // each value sets eps_x_sq
  std::string methods = all_methods_list();
};

std::vector<double> linspace_steps(double from, double step, int count) {
  std::vector<double> v;
  // Rounded so 0.01 * 7 is reported as 0.07.
  for (int i = 0; i < count; ++i) v.push_back(std::round((from + step * i) * 1e12) / 1e12);
  return v;
}

SimPlan preset_plan(const std::string& name, bool paper_scale) {
  SimPlan plan;
  auto& c = plan.base;
  // Desk scale keeps the causal-SNP counts and heritability range of the full
  // design by shrinking p tenfold and scaling the mixture weights up.
  const std::vector<double> pis = paper_scale ? linspace_steps(0.001, 0.001, 10)
                                              : linspace_steps(0.01, 0.01, 10);
  if (paper_scale) {
    c.p = 200000;
    c.reps = 1000;
  }
  if (name == "figure3-desk") {
    plan.pi_sweep = pis;
  } else if (name == "null-beta") {
    c.beta = 0;
    plan.pi_sweep = pis;
  } else if (name == "ess-sweep") {
    c.p = 20000;
    c.pi1 = c.pi2 = c.pi3 = 1.0 / 3.0;
    plan.eps_sweep = linspace_steps(5e-6, 1e-6, 16);
    plan.methods = "REgger";
  } else if (name == "attenuation") {
    c.p = 5000;
    c.reps = 1000;
    c.pi1 = 1;
    c.pi2 = c.pi3 = 0;
    c.eps_x_sq = 1e-5;
    plan.methods = "Egger,dEgger";
  } else if (!name.empty()) {
    throw InputError("unknown preset " + name +
                     " (expected figure3-desk, null-beta, ess-sweep or attenuation)");
  }
  return plan;
}

void apply_config_file(const std::string& path, SimPlan& plan) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read simulation config " + path);
  nlohmann::json j;
  try {
    in >> j;
    auto& c = plan.base;
    auto take = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    take("p", c.p);
    take("n_x", c.n_x);
    take("n_y", c.n_y);
    take("beta", c.beta);
    take("mu_gamma", c.mu_gamma);
    take("mu_alpha", c.mu_alpha);
    take("eps_x_sq", c.eps_x_sq);
    take("eps_alpha_sq", c.eps_alpha_sq);
    take("pi1", c.pi1);
    take("pi2", c.pi2);
    take("pi3", c.pi3);
    take("flip_fraction", c.flip_fraction);
    take("seed", c.seed);
    take("reps", c.reps);
    take("pi_sweep", plan.pi_sweep);
    take("eps_x_sq_sweep", plan.eps_sweep);
    take("methods", plan.methods);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("invalid simulation config: " + std::string(e.what()));
  }
}

json sim_config_json(const sim::SimConfig& c) {
  const auto h2 = sim::heritability(c);
  return {{"p", c.p},
          {"n_x", c.n_x},
          {"n_y", c.n_y},
          {"beta", c.beta},
          {"mu_gamma", c.mu_gamma},
          {"mu_alpha", c.mu_alpha},
          {"eps_x_sq", c.eps_x_sq},
          {"eps_alpha_sq", c.eps_alpha_sq},
          {"pi1", c.pi1},
          {"pi2", c.pi2},
          {"pi3", c.pi3},
          {"flip_fraction", c.flip_fraction},
          {"reps", c.reps},
          {"h2_x", h2.h2_x},
          {"h2_y", h2.h2_y}};
}

int cmd_simulate(const SimulateArgs& a, const std::vector<std::string>& args, std::ostream& out,
                 std::ostream& err) {
  SimPlan plan = preset_plan(a.preset, a.paper_scale);
  if (!a.config.empty()) apply_config_file(a.config, plan);
  auto& c = plan.base;
  if (a.p) c.p = *a.p;
  if (a.reps) c.reps = *a.reps;
  if (a.n_x) c.n_x = *a.n_x;
  if (a.n_y) c.n_y = *a.n_y;
  if (a.beta) c.beta = *a.beta;
  if (a.mu_gamma) c.mu_gamma = *a.mu_gamma;
  if (a.mu_alpha) c.mu_alpha = *a.mu_alpha;
  if (a.eps_alpha_sq) c.eps_alpha_sq = *a.eps_alpha_sq;
  if (a.pi1) c.pi1 = *a.pi1;
  if (a.pi2) c.pi2 = *a.pi2;
  if (a.pi3) c.pi3 = *a.pi3;
  if (a.flip) c.flip_fraction = *a.flip;
  if (a.seed) c.seed = *a.seed;
  if (!a.pi_sweep.empty()) plan.pi_sweep = a.pi_sweep;
  if (!a.eps_sweep.empty()) plan.eps_sweep = a.eps_sweep;
  if (!a.methods.empty()) plan.methods = a.methods;

  std::vector<sim::SimConfig> configs;
  if (!plan.pi_sweep.empty()) {
    for (double pi : plan.pi_sweep) {
      auto point = c;
      point.pi1 = point.pi2 = point.pi3 = pi;
      configs.push_back(point);
    }
  } else if (!plan.eps_sweep.empty()) {
    for (double eps : plan.eps_sweep) {
      auto point = c;
      point.eps_x_sq = eps;
      configs.push_back(point);
    }
  } else {
    configs.push_back(c);
  }
  for (const auto& point : configs) point.validate();
  const auto methods = parse_methods(plan.methods);
  const auto plans = sim::default_plans(methods, a.pthreshold, a.eta, pvalue_to_lambda(a.fixed_pthreshold));
  if (!(a.eta > 0)) throw InputError("--eta must be positive");
  const unsigned threads = resolve_threads(a.threads);
  if (c.reps == 1) err << "warning: reps=1, the sd column is left empty\n";

  std::vector<SweepPoint> points;
  bool flagged = false;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    auto result = sim::run_study(configs[i], plans, threads);
    for (const auto& m : result.metrics) {
      if (m.flagged) {
        flagged = true;
        err << "warning: point " << i << ' ' << method_name(m.method) << ": " << m.reps_failed
            << " of " << (m.reps_ok + m.reps_failed) << " replicates failed\n";
      }
    }
    points.push_back({configs[i], std::move(result)});
  }

  const std::string metrics = metrics_tsv(points, plans);
  if (!a.out.empty()) {
    const auto dir = prepare_dir(a.out);
    write_file(dir / "metrics.tsv", metrics);
    write_file(dir / "reps.tsv", reps_tsv(points, plans));
    write_file(dir / "plot.tsv", plot_tsv(points, plans));
    json config;
    config["preset"] = a.preset.empty() ? json(nullptr) : json(a.preset);
    json pts = json::array();
    for (const auto& point : configs) pts.push_back(sim_config_json(point));
    config["points"] = pts;
    json plan_json = json::array();
    for (const auto& p : plans) {
      plan_json.push_back({{"method", std::string(method_name(p.method))},
                           {"selection", uses_random_selection(p.method) ? "random" : "fixed"},
                           {"lambda", p.lambda},
                           {"eta", p.eta}});
    }
    config["plans"] = plan_json;
    config["pthreshold"] = a.pthreshold;
    config["fixed_pthreshold"] = a.fixed_pthreshold;
    std::vector<std::string> inputs;
    if (!a.config.empty()) inputs.push_back(a.config);
    write_manifest(dir, args, config, c.seed, inputs);
  } else {
    out << metrics;
  }
  return flagged ? kExitPartial : kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-sample summary-data Mendelian randomization with rerandomized Egger"};
  app.name("mrregger");
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  HarmonizeArgs h;
  auto* harm = app.add_subcommand("harmonize", "QC, align and join exposure/outcome GWAS files");
  harm->add_option("--exposure", h.exposure, "Exposure summary statistics")->required();
  harm->add_option("--outcome", h.outcome, "Outcome summary statistics")->required();
  harm->add_option("--out", h.out, "Output directory")->required();
  harm->add_option("--maf", h.maf, "Minimum minor-allele frequency")->capture_default_str();
  harm->add_option("--palindrome-threshold", h.palindrome,
                   "Drop palindromic SNPs with |eaf - 0.5| below this")
      ->capture_default_str();
  harm->add_option("--exclude-region", h.regions, "Extra excluded region chrom:start-end");
  harm->add_flag("--no-mhc-filter", h.no_region_filter, "Keep the MHC region");
  harm->add_option("--whitelist", h.whitelist, "File of SNP ids to keep (e.g. clumped, HapMap3)");
  harm->add_option("--format-config", h.format_config, "JSON column mapping");
  harm->add_option("--snp-col", h.format.snp)->capture_default_str();
  harm->add_option("--a1-col", h.format.effect_allele)->capture_default_str();
  harm->add_option("--a2-col", h.format.other_allele)->capture_default_str();
  harm->add_option("--eaf-col", h.format.eaf)->capture_default_str();
  harm->add_option("--beta-col", h.format.beta)->capture_default_str();
  harm->add_option("--se-col", h.format.se)->capture_default_str();
  harm->add_option("--p-col", h.format.pval)->capture_default_str();
  harm->add_option("--chr-col", h.chrom_col);
  harm->add_option("--pos-col", h.pos_col);

  EstimateArgs e;
  e.methods = all_methods_list();
  auto* est = app.add_subcommand("estimate", "Run estimators on a harmonized TSV");
  est->add_option("--input", e.input, "Harmonized TSV")->required();
  est->add_option("--methods", e.methods, "Comma-separated method list")->capture_default_str();
  est->add_option("--pthreshold", e.pthreshold, "Selection p-value for RIVW/REgger")->capture_default_str();
  est->add_option("--eta", e.eta, "Pseudo-noise SD")->capture_default_str();
  est->add_option("--seed", e.seed, "Selection seed")->capture_default_str();
  est->add_option("--fixed-pthreshold", e.fixed_pthreshold, "Filter p-value for the other methods")
      ->capture_default_str();
  est->add_flag("--no-select", e.no_select, "Use every instrument for the fixed-threshold methods");
  est->add_option("--out", e.out, "Output directory for report.json/report.tsv");

  DiagnoseArgs d;
  auto* diag = app.add_subcommand("diagnose", "Instrument-strength diagnostics for a harmonized TSV");
  diag->add_option("--input", d.input, "Harmonized TSV")->required();
  diag->add_option("--pthreshold", d.pthreshold)->capture_default_str();
  diag->add_option("--eta", d.eta)->capture_default_str();
  diag->add_option("--seed", d.seed)->capture_default_str();

  SimulateArgs s;
  auto* simc = app.add_subcommand("simulate", "Monte Carlo study of the estimators");
  simc->add_option("--preset", s.preset, "figure3-desk, null-beta, ess-sweep or attenuation");
  simc->add_option("--config", s.config, "JSON simulation config");
  simc->add_flag("--paper-scale", s.paper_scale, "p = 200000, 1000 reps, unscaled mixture weights");
  simc->add_option("--out", s.out, "Output directory (metrics to stdout when absent)");
  simc->add_option("--p", s.p);
  simc->add_option("--reps", s.reps);
  simc->add_option("--n-x", s.n_x);
  simc->add_option("--n-y", s.n_y);
  simc->add_option("--beta", s.beta);
  simc->add_option("--mu-gamma", s.mu_gamma);
  simc->add_option("--mu-alpha", s.mu_alpha);
  simc->add_option("--eps-alpha-sq", s.eps_alpha_sq);
  simc->add_option("--pi1", s.pi1);
  simc->add_option("--pi2", s.pi2);
  simc->add_option("--pi3", s.pi3);
  simc->add_option("--flip-fraction", s.flip);
  simc->add_option("--pi", s.pi_sweep, "Sweep values, each sets pi1 = pi2 = pi3");
  simc->add_option("--eps-x-sq", s.eps_sweep, "Sweep values of eps_x^2");
  simc->add_option("--seed", s.seed);
  simc->add_option("--methods", s.methods);
  simc->add_option("--pthreshold", s.pthreshold)->capture_default_str();
  simc->add_option("--eta", s.eta)->capture_default_str();
  simc->add_option("--fixed-pthreshold", s.fixed_pthreshold)->capture_default_str();
  simc->add_option("--threads", s.threads, "Worker threads (default MRREGGER_THREADS or all cores)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*harm) return cmd_harmonize(h, args, out, err);
    if (*est) return cmd_estimate(e, args, out, err);
    if (*diag) return cmd_diagnose(d, out, err);
    return cmd_simulate(s, args, out, err);
  } catch (const InputError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitInvalid;
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitPartial;
  }
}

}  // namespace mrregger::cli
