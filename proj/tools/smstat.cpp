// smstat: command-line front end for the sentiment-index validation and
// pseudo survey pipeline.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "smstat/io.hpp"
#include "smstat/one_phase.hpp"
#include "smstat/population.hpp"
#include "smstat/quality.hpp"
#include "smstat/simulator.hpp"
#include "smstat/two_phase.hpp"

namespace fs = std::filesystem;
using smstat::io::json;

namespace {

constexpr const char* tool_version = "0.1.0";
constexpr int exit_fatal = 1;
constexpr int exit_usage = 2;

struct UsageError : smstat::Error {
  using smstat::Error::Error;
};

struct Globals {
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
};

class Manifest {
public:
  explicit Manifest(std::string subcommand) : start_(std::chrono::steady_clock::now()) {
    j_["subcommand"] = std::move(subcommand);
    j_["parameters"] = json::object();
    j_["inputs"] = json::array();
    j_["outputs"] = json::array();
    j_["seed"] = nullptr;
    j_["tool_version"] = tool_version;
  }

  template <class T>
  void param(const std::string& k, const T& v) { j_["parameters"][k] = v; }
  void input(const std::string& p) { j_["inputs"].push_back(p); }
  void output(const std::string& p) { j_["outputs"].push_back(p); }
  void seed(std::uint64_t s) { j_["seed"] = s; }

  void write(const std::string& path) {
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    j_["wall_time_s"] = elapsed;
    smstat::io::write_json_file(path, j_);
  }

private:
  json j_;
  std::chrono::steady_clock::time_point start_;
};

std::string manifest_path_for(const std::string& out) { return out + ".manifest.json"; }

void require_out(const Globals& g) {
  if (g.out.empty()) throw UsageError("--out is required");
}

void write_file(const std::string& path, const std::string& content) {
  auto f = smstat::io::open_out(path);
  f << content;
}

// Resolves the benchmark standard errors from exactly one of --cv and
// --sigma-column.
std::vector<double> resolve_sigma(const smstat::PairedSeries& s, std::optional<double> cv, bool sigma_column) {
  if (cv.has_value() == sigma_column) throw UsageError("supply exactly one of --cv and --sigma-column");
  if (cv) return smstat::sigma_from_cv(s.cci, *cv);
  if (!s.sigma) throw UsageError("--sigma-column given but the series file has no 'sigma' column");
  return *s.sigma;
}

// ------------------------------------------------------------------ smi

struct SmiArgs {
  std::string posts;
};

int run_smi(const Globals& g, const SmiArgs& a) {
  require_out(g);
  Manifest m("smi");
  m.input(a.posts);
  m.param("format", g.format);

  smstat::io::Loaded<smstat::SentimentPost> loaded;
  try {
    loaded = smstat::io::read_sentiment_posts(a.posts);
  } catch (const smstat::ParseError& e) {
    if (std::string(e.what()).find("empty") != std::string::npos) throw smstat::ParseError("no posts");
    throw;
  }
  if (!loaded.errors.empty()) {
    for (const auto& e : loaded.errors) std::cerr << a.posts << ": " << e << '\n';
    std::cerr << loaded.errors.size() << " malformed record(s); nothing written\n";
    return exit_fatal;
  }
  if (loaded.items.empty()) throw smstat::ParseError("no posts");

  const smstat::IndexSeries series = smstat::monthly_smi(loaded.items);
  std::ostringstream os;
  if (g.format == "json")
    os << smstat::io::smi_to_json(series).dump(2) << '\n';
  else
    smstat::io::write_smi_csv(os, series);
  write_file(g.out, os.str());
  m.output(g.out);
  m.write(manifest_path_for(g.out));
  return 0;
}

// ------------------------------------------------------------------ validate

struct ValidateArgs {
  std::string series;
  std::optional<double> cv;
  bool sigma_column = false;
  double alpha = 0.05;
  std::size_t deleted_index = 0;
};

int run_validate(const Globals& g, const ValidateArgs& a) {
  require_out(g);
  Manifest m("validate");
  m.input(a.series);
  const smstat::PairedSeries s = smstat::io::read_paired_series(a.series);
  const auto sigma = resolve_sigma(s, a.cv, a.sigma_column);
  const smstat::TestResult r = smstat::validation_test(s.cci, s.smi, sigma, a.deleted_index);

  json j = smstat::io::to_json(r, a.alpha);
  if (a.cv) j["cv"] = *a.cv;
  smstat::io::write_json_file(g.out, j);
  if (a.cv) m.param("cv", *a.cv);
  m.param("sigma_column", a.sigma_column);
  m.param("alpha", a.alpha);
  m.param("deleted_index", r.deleted_index);
  m.output(g.out);
  m.write(manifest_path_for(g.out));
  return 0;
}

// ------------------------------------------------------------------ sensitivity

struct SensitivityArgs {
  std::string series;
  double eta_min = 0.05;
  double eta_max = 0.5;
  std::size_t steps = 100;
  double alpha = 0.05;
  std::string threshold_out;
};

int run_sensitivity(const Globals& g, const SensitivityArgs& a) {
  require_out(g);
  if (!(a.eta_min > 0.0) || !(a.eta_max > a.eta_min)) throw UsageError("need 0 < --eta-min < --eta-max");
  if (a.steps < 2) throw UsageError("--steps must be at least 2");
  Manifest m("sensitivity");
  m.input(a.series);
  const smstat::PairedSeries s = smstat::io::read_paired_series(a.series);
  const auto grid = smstat::linear_grid(a.eta_min, a.eta_max, a.steps);
  const smstat::SensitivityCurve curve = smstat::sensitivity_sweep(s.cci, s.smi, grid, a.alpha);

  json threshold{{"threshold_eta", curve.threshold_eta ? json(*curve.threshold_eta) : json(nullptr)},
                 {"grid_threshold_eta", curve.grid_threshold_eta ? json(*curve.grid_threshold_eta) : json(nullptr)},
                 {"alpha", a.alpha}};
  if (g.format == "json") {
    smstat::io::write_json_file(g.out, smstat::io::to_json(curve));
    m.output(g.out);
  } else {
    std::ostringstream os;
    smstat::io::write_curve_csv(os, curve);
    write_file(g.out, os.str());
    const std::string tpath = a.threshold_out.empty() ? g.out + ".threshold.json" : a.threshold_out;
    smstat::io::write_json_file(tpath, threshold);
    m.output(g.out);
    m.output(tpath);
  }
  std::cout << threshold.dump() << '\n';
  m.param("eta_min", a.eta_min);
  m.param("eta_max", a.eta_max);
  m.param("steps", a.steps);
  m.param("alpha", a.alpha);
  m.param("format", g.format);
  m.write(manifest_path_for(g.out));
  return 0;
}

// ------------------------------------------------------------------ calibrate

struct CalibrateArgs {
  std::string series;
  std::optional<double> cv;
  bool sigma_column = false;
  double mu = 0.0;
  std::size_t sims = 10000;
  double alpha = 0.05;
  unsigned threads = 0;
};

int run_calibrate(const Globals& g, const CalibrateArgs& a) {
  require_out(g);
  if (!g.seed) throw UsageError("calibrate requires an explicit --seed");
  Manifest m("calibrate");
  m.input(a.series);
  m.seed(*g.seed);
  const smstat::PairedSeries s = smstat::io::read_paired_series(a.series);
  const auto sigma = resolve_sigma(s, a.cv, a.sigma_column);
  const smstat::CalibrationResult r = smstat::calibrate_null(sigma, a.mu, a.sims, a.alpha, *g.seed, a.threads);
  json j = smstat::io::to_json(r);
  j["alpha"] = a.alpha;
  j["mu"] = a.mu;
  j["df"] = sigma.size() - 1;
  j["seed"] = *g.seed;
  smstat::io::write_json_file(g.out, j);
  if (a.cv) m.param("cv", *a.cv);
  m.param("mu", a.mu);
  m.param("sims", a.sims);
  m.param("alpha", a.alpha);
  m.output(g.out);
  m.write(manifest_path_for(g.out));
  return 0;
}

// ------------------------------------------------------------------ pipeline

struct PipelineArgs {
  std::string api;
  std::string broker;
  std::string gazetteer;
  double eps = 100.0;
  std::size_t min_points = 3;
  std::string country;
};

int run_pipeline(const Globals& g, const PipelineArgs& a) {
  require_out(g);
  if (!(a.eps > 0.0)) throw UsageError("--eps must be positive");
  if (a.min_points < 1) throw UsageError("--min-points must be at least 1");
  fs::create_directories(g.out);
  Manifest m("pipeline");
  m.input(a.api);
  m.input(a.broker);
  m.input(a.gazetteer);
  m.param("eps_m", a.eps);
  m.param("min_points", a.min_points);
  m.param("country", a.country);

  const auto api = smstat::io::read_geo_posts(a.api);
  const auto broker = smstat::io::read_geo_posts(a.broker);
  const auto gazetteer = smstat::io::read_gazetteer(a.gazetteer);

  std::vector<std::string> rejects;
  for (const auto& e : api.errors) rejects.push_back(a.api + ": " + e);
  for (const auto& e : broker.errors) rejects.push_back(a.broker + ": " + e);

  smstat::MergeResult merged = smstat::merge_clean(api.items, broker.items, a.country);
  for (const auto& r : merged.rejects) rejects.push_back(r.source + ": " + r.reason);
  smstat::PipelineResult built = smstat::build_pseudo_survey(merged.clean, gazetteer, a.eps, a.min_points);
  smstat::PipelineErrorReport report = merged.report;
  report += built.report;

  const fs::path dir(g.out);
  {
    auto f = smstat::io::open_out((dir / "pseudo_survey.jsonl").string());
    smstat::io::write_records(f, built.records);
  }
  json rep = smstat::io::to_json(report);
  rep["raw_posts"] = api.items.size() + broker.items.size() - merged.rejects.size();
  rep["clean_posts"] = merged.clean.size();
  rep["rejected_records"] = rejects.size();
  rep["records"] = built.records.size();
  smstat::io::write_json_file((dir / "error_report.json").string(), rep);
  {
    auto f = smstat::io::open_out((dir / "rejects.log").string());
    for (const auto& r : rejects) f << r << '\n';
  }
  for (const char* name : {"pseudo_survey.jsonl", "error_report.json", "rejects.log"})
    m.output((dir / name).string());
  m.write((dir / "manifest.json").string());
  if (!rejects.empty()) std::cerr << rejects.size() << " record(s) rejected; see " << (dir / "rejects.log") << '\n';
  return 0;
}

// ------------------------------------------------------------------ simulate

struct SimulateArgs {
  std::string config;
};

int run_simulate(const Globals& g, const SimulateArgs& a) {
  require_out(g);
  const json cj = smstat::io::read_json_file(a.config);
  smstat::sim::SimConfig cfg;
  try {
    cfg = smstat::io::sim_config_from_json(cj);
  } catch (const smstat::ParseError& e) {
    throw UsageError(e.what());
  }
  if (g.seed)
    cfg.seed = *g.seed;
  else if (!cj.contains("seed"))
    throw UsageError("simulate requires a seed (config field 'seed' or --seed)");

  fs::create_directories(g.out);
  const fs::path dir(g.out);
  Manifest m("simulate");
  m.input(a.config);
  m.seed(cfg.seed);
  m.param("config", smstat::io::to_json(cfg));

  const smstat::sim::SimOutput sim = smstat::sim::generate(cfg);
  std::vector<smstat::GeoPost> api, broker;
  for (const auto& p : sim.geo_posts) (p.source == smstat::PostSource::api ? api : broker).push_back(p);

  auto path = [&](const char* name) {
    const std::string p = (dir / name).string();
    m.output(p);
    return p;
  };
  {
    auto f = smstat::io::open_out(path("api_posts.jsonl"));
    smstat::io::write_geo_posts(f, api);
  }
  {
    auto f = smstat::io::open_out(path("broker_posts.jsonl"));
    smstat::io::write_geo_posts(f, broker);
  }
  {
    auto f = smstat::io::open_out(path("gazetteer.csv"));
    smstat::io::write_gazetteer(f, sim.gazetteer);
  }
  {
    auto f = smstat::io::open_out(path("sentiment_posts.csv"));
    smstat::io::write_sentiment_posts(f, sim.sentiment_posts);
  }
  smstat::io::write_relations(sim.truth.rel, path("post_account.csv"), path("account_user.csv"));
  smstat::io::write_register(sim.truth.register_, path("register.csv"));
  nlohmann::json truth = smstat::io::to_json(sim.truth);
  truth["true_theta"] = smstat::sim::true_theta(sim.truth);
  smstat::io::write_json_file(path("ground_truth.json"), truth);
  smstat::io::write_json_file(path("config.json"), smstat::io::to_json(cfg));
  m.write((dir / "manifest.json").string());
  return 0;
}

// ------------------------------------------------------------------ quality

struct QualityArgs {
  std::string records;
  std::string truth;
};

int run_quality(const Globals& g, const QualityArgs& a) {
  require_out(g);
  Manifest m("quality");
  m.input(a.records);
  m.input(a.truth);
  std::vector<smstat::PseudoSurveyRecord> records;
  smstat::sim::GroundTruth truth;
  try {
    records = smstat::io::read_records(a.records);
    truth = smstat::io::ground_truth_from_json(smstat::io::read_json_file<nlohmann::json>(a.truth));
  } catch (const smstat::ParseError& e) {
    throw UsageError(e.what());
  }
  const smstat::QualityReport q = smstat::compare_with_truth(records, truth);
  smstat::io::write_json_file(g.out, smstat::io::to_json(q));
  m.output(g.out);
  m.write(manifest_path_for(g.out));
  return 0;
}

// ------------------------------------------------------------------ coverage

struct CoverageArgs {
  std::string post_account;
  std::string account_user;
  std::string register_path;
};

int run_coverage(const Globals& g, const CoverageArgs& a) {
  require_out(g);
  Manifest m("coverage");
  m.input(a.post_account);
  m.input(a.account_user);
  m.input(a.register_path);
  const smstat::RelationTable rel = smstat::io::read_relations(a.post_account, a.account_user);
  const smstat::PopulationRegister reg = smstat::io::read_register(a.register_path);

  smstat::IdSet<smstat::PostId> posts;
  for (const auto& [p, acc] : rel.post_to_account()) posts.insert(p);
  const auto accounts = smstat::accounts_of(posts, rel);
  const auto users = smstat::resolve_users(accounts, rel);
  const smstat::CoverageReport cov = smstat::coverage_report(users.users, reg, rel);

  auto ids = [](const auto& set) {
    json arr = json::array();
    for (const auto& x : set) arr.push_back(x.str());
    return arr;
  };
  json dup = json::object();
  for (const auto& [u, n] : cov.duplicate_users) dup[u.str()] = n;
  json j{{"posts", posts.size()},
         {"accounts", accounts.size()},
         {"users", users.users.size()},
         {"unresolved_accounts", ids(users.unresolved)},
         {"in_scope", ids(cov.in_scope)},
         {"under", ids(cov.under)},
         {"over", ids(cov.over)},
         {"duplicate_users", dup}};
  smstat::io::write_json_file(g.out, j);
  m.output(g.out);
  m.write(manifest_path_for(g.out));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentiment-index validation and pseudo survey construction from social media posts"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", tool_version);

  Globals g;
  app.add_option("--out", g.out, "Output file (or directory for pipeline/simulate)");
  app.add_option("--seed", g.seed, "Seed for randomized subcommands");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}));

  SmiArgs smi;
  auto* c_smi = app.add_subcommand("smi", "Monthly sentiment index from classified posts");
  c_smi->add_option("--posts,posts", smi.posts, "Posts CSV: post_id,account_id,timestamp,sentiment")
      ->required()
      ->check(CLI::ExistingFile);

  ValidateArgs val;
  auto* c_val = app.add_subcommand("validate", "Test whether index and benchmark differ by a constant");
  c_val->add_option("--series,series", val.series, "Paired CSV: period,cci,smi[,sigma]")
      ->required()
      ->check(CLI::ExistingFile);
  c_val->add_option("--cv", val.cv, "Benchmark coefficient of variation (sigma_t = cv*|cci_t|)");
  c_val->add_flag("--sigma-column", val.sigma_column, "Take sigma_t from the series file");
  c_val->add_option("--alpha", val.alpha, "Test level (reject iff p <= alpha)")->check(CLI::Range(0.0, 1.0));
  c_val->add_option("--deleted-index", val.deleted_index, "1-based component to drop (default: last)");

  SensitivityArgs sen;
  auto* c_sen = app.add_subcommand("sensitivity", "p-value as a function of the benchmark CV");
  c_sen->add_option("--series,series", sen.series, "Paired CSV: period,cci,smi")->required()->check(CLI::ExistingFile);
  c_sen->add_option("--eta-min", sen.eta_min, "Smallest CV on the grid");
  c_sen->add_option("--eta-max", sen.eta_max, "Largest CV on the grid");
  c_sen->add_option("--steps", sen.steps, "Number of grid points");
  c_sen->add_option("--alpha", sen.alpha, "Test level")->check(CLI::Range(0.0, 1.0));
  c_sen->add_option("--threshold-out", sen.threshold_out, "Threshold JSON path (default: <out>.threshold.json)");

  CalibrateArgs cal;
  auto* c_cal = app.add_subcommand("calibrate", "Monte Carlo rejection rate of the test under its null");
  c_cal->add_option("--series,series", cal.series, "Paired CSV supplying cci (and sigma)")
      ->required()
      ->check(CLI::ExistingFile);
  c_cal->add_option("--cv", cal.cv, "Benchmark coefficient of variation");
  c_cal->add_flag("--sigma-column", cal.sigma_column, "Take sigma_t from the series file");
  c_cal->add_option("--mu", cal.mu, "Constant offset under the null");
  c_cal->add_option("--sims", cal.sims, "Number of simulations (>= 1000)");
  c_cal->add_option("--alpha", cal.alpha, "Test level")->check(CLI::Range(0.0, 1.0));
  c_cal->add_option("--threads", cal.threads, "Worker threads (0: hardware concurrency)");

  PipelineArgs pipe;
  auto* c_pipe = app.add_subcommand("pipeline", "Build the pseudo survey dataset from geolocated posts");
  c_pipe->add_option("--api", pipe.api, "API posts JSONL")->required()->check(CLI::ExistingFile);
  c_pipe->add_option("--broker", pipe.broker, "Broker posts JSONL")->required()->check(CLI::ExistingFile);
  c_pipe->add_option("--gazetteer", pipe.gazetteer, "Gazetteer CSV: address_id,lat,lon,address_type")
      ->required()
      ->check(CLI::ExistingFile);
  c_pipe->add_option("--eps", pipe.eps, "DBSCAN radius in metres");
  c_pipe->add_option("--min-points", pipe.min_points, "Minimum posts for a valid cluster");
  c_pipe->add_option("--country", pipe.country, "Two-letter country code to keep")->required();

  SimulateArgs simu;
  auto* c_sim = app.add_subcommand("simulate", "Generate a synthetic dataset with ground truth");
  c_sim->add_option("--config,config", simu.config, "Simulation config JSON")->required()->check(CLI::ExistingFile);

  QualityArgs qual;
  auto* c_q = app.add_subcommand("quality", "Compare pseudo survey records with ground truth");
  c_q->add_option("--records,records", qual.records, "pseudo_survey.jsonl")->required()->check(CLI::ExistingFile);
  c_q->add_option("--truth,truth", qual.truth, "ground_truth.json")->required()->check(CLI::ExistingFile);

  CoverageArgs cov;
  auto* c_cov = app.add_subcommand("coverage", "Coverage of a register by the users behind observed posts");
  c_cov->add_option("--post-account", cov.post_account, "CSV: post_id,account_id")->required()->check(CLI::ExistingFile);
  c_cov->add_option("--account-user", cov.account_user, "CSV: account_id,user_id")->required()->check(CLI::ExistingFile);
  c_cov->add_option("--register", cov.register_path, "CSV: user_id")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : exit_usage;
  }

  try {
    if (*c_smi) return run_smi(g, smi);
    if (*c_val) return run_validate(g, val);
    if (*c_sen) return run_sensitivity(g, sen);
    if (*c_cal) return run_calibrate(g, cal);
    if (*c_pipe) return run_pipeline(g, pipe);
    if (*c_sim) return run_simulate(g, simu);
    if (*c_q) return run_quality(g, qual);
    if (*c_cov) return run_coverage(g, cov);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_fatal;
  }
  return exit_usage;
}
