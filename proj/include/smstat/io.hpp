#pragma once

// File formats: CSV and JSONL readers/writers for every dataset the tools
// exchange, plus JSON renderings of results. Readers that process
// record-oriented input collect per-record errors instead of stopping at the
// first bad line.

#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "smstat/csv.hpp"
#include "smstat/error.hpp"
#include "smstat/one_phase.hpp"
#include "smstat/population.hpp"
#include "smstat/quality.hpp"
#include "smstat/simulator.hpp"
#include "smstat/timeutil.hpp"
#include "smstat/two_phase.hpp"

namespace smstat::io {

using json = nlohmann::ordered_json;

template <class T>
struct Loaded {
  std::vector<T> items;
  std::vector<std::string> errors;  // "line N: reason"
};

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return in;
}

template <class Json = json>
Json read_json_file(const std::string& path) {
  auto in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

template <class Json = json>
void write_json_file(const std::string& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------- relations

inline RelationTable read_relations(const std::string& post_account_csv, const std::string& account_user_csv) {
  RelationTable rel;
  const csv::Table pa = csv::read_file(post_account_csv);
  const std::size_t pc = pa.column("post_id"), ac = pa.column("account_id");
  for (const auto& row : pa.rows()) {
    try {
      rel.link_post(PostId(row.fields[pc]), AccountId(row.fields[ac]));
    } catch (const Error& e) {
      throw ParseError(post_account_csv + " line " + std::to_string(row.line) + ": " + e.what());
    }
  }
  const csv::Table au = csv::read_file(account_user_csv);
  const std::size_t ac2 = au.column("account_id"), uc = au.column("user_id");
  for (const auto& row : au.rows()) {
    try {
      rel.link_account(AccountId(row.fields[ac2]), UserId(row.fields[uc]));
    } catch (const Error& e) {
      throw ParseError(account_user_csv + " line " + std::to_string(row.line) + ": " + e.what());
    }
  }
  return rel;
}

inline void write_relations(const RelationTable& rel, const std::string& post_account_csv,
                            const std::string& account_user_csv) {
  auto pa = open_out(post_account_csv);
  pa << "post_id,account_id\n";
  for (const auto& [p, a] : rel.post_to_account()) pa << csv::join({p.str(), a.str()}) << '\n';
  auto au = open_out(account_user_csv);
  au << "account_id,user_id\n";
  for (const auto& [a, u] : rel.account_to_user()) au << csv::join({a.str(), u.str()}) << '\n';
}

inline PopulationRegister read_register(const std::string& path) {
  PopulationRegister reg;
  const csv::Table t = csv::read_file(path);
  const std::size_t uc = t.column("user_id");
  for (const auto& row : t.rows()) {
    try {
      if (!reg.members.insert(UserId(row.fields[uc])).second)
        throw ParseError("duplicate user_id '" + row.fields[uc] + "'");
    } catch (const Error& e) {
      throw ParseError(path + " line " + std::to_string(row.line) + ": " + e.what());
    }
  }
  return reg;
}

inline void write_register(const PopulationRegister& reg, const std::string& path) {
  auto out = open_out(path);
  out << "user_id\n";
  for (const auto& u : reg.members) out << csv::quote(u.str()) << '\n';
}

// ---------------------------------------------------------------- one-phase

inline Loaded<SentimentPost> read_sentiment_posts(std::istream& in) {
  Loaded<SentimentPost> out;
  const csv::Table t = csv::read(in);
  t.require({"post_id", "account_id", "timestamp", "sentiment"});
  const std::size_t pc = t.column("post_id"), ac = t.column("account_id"), tc = t.column("timestamp"),
                    sc = t.column("sentiment");
  for (const auto& row : t.rows()) {
    try {
      SentimentPost p;
      p.post_id = PostId(row.fields[pc]);
      p.account_id = AccountId(row.fields[ac]);
      p.timestamp = parse_iso8601(row.fields[tc]);
      const long long z = csv::to_int(row.fields[sc], row.line, "sentiment");
      if (!valid_sentiment(static_cast<int>(z)) || z < -1 || z > 1)
        throw ParseError("sentiment must be -1, 0 or 1, got " + row.fields[sc]);
      p.sentiment = static_cast<int>(z);
      out.items.push_back(std::move(p));
    } catch (const Error& e) {
      std::string msg = e.what();
      if (!msg.starts_with("line ")) msg = "line " + std::to_string(row.line) + ": " + msg;
      out.errors.push_back(std::move(msg));
    }
  }
  return out;
}

inline Loaded<SentimentPost> read_sentiment_posts(const std::string& path) {
  auto in = open_in(path);
  return read_sentiment_posts(in);
}

inline void write_sentiment_posts(std::ostream& out, const std::vector<SentimentPost>& posts) {
  out << "post_id,account_id,timestamp,sentiment\n";
  for (const auto& p : posts)
    out << csv::join({p.post_id.str(), p.account_id.str(), format_iso8601(p.timestamp), std::to_string(p.sentiment)})
        << '\n';
}

inline void write_smi_csv(std::ostream& out, const IndexSeries& s) {
  out << "period,m,smi\n";
  for (std::size_t i = 0; i < s.size(); ++i)
    out << csv::quote(s.periods[i]) << ',' << s.post_counts[i] << ',' << csv::format_double(s.values[i]) << '\n';
}

inline json smi_to_json(const IndexSeries& s) {
  json rows = json::array();
  for (std::size_t i = 0; i < s.size(); ++i)
    rows.push_back({{"period", s.periods[i]}, {"m", s.post_counts[i]}, {"smi", s.values[i]}});
  return rows;
}

inline PairedSeries read_paired_series(std::istream& in) {
  const csv::Table t = csv::read(in);
  t.require({"period", "cci", "smi"});
  const std::size_t pc = t.column("period"), cc = t.column("cci"), sc = t.column("smi");
  const bool has_sigma = t.has("sigma");
  PairedSeries s;
  if (has_sigma) s.sigma.emplace();
  for (const auto& row : t.rows()) {
    s.cci.periods.push_back(row.fields[pc]);
    s.smi.periods.push_back(row.fields[pc]);
    s.cci.values.push_back(csv::to_double(row.fields[cc], row.line, "cci"));
    s.smi.values.push_back(csv::to_double(row.fields[sc], row.line, "smi"));
    if (has_sigma) s.sigma->push_back(csv::to_double(row.fields[t.column("sigma")], row.line, "sigma"));
  }
  s.cci.validate();
  return s;
}

inline PairedSeries read_paired_series(const std::string& path) {
  auto in = open_in(path);
  try {
    return read_paired_series(in);
  } catch (const ParseError& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

inline json to_json(const TestResult& r, std::optional<double> alpha = std::nullopt) {
  json j{{"D", r.statistic}, {"df", r.df}, {"p_value", r.p_value}, {"deleted_index", r.deleted_index}};
  if (alpha) {
    j["alpha"] = *alpha;
    j["reject"] = r.reject(*alpha);
  }
  return j;
}

inline json to_json(const SensitivityCurve& c) {
  json pts = json::array();
  for (std::size_t i = 0; i < c.etas.size(); ++i)
    pts.push_back({{"eta", c.etas[i]}, {"D", c.statistics[i]}, {"p_value", c.p_values[i]}});
  json j{{"alpha", c.alpha}};
  j["threshold_eta"] = c.threshold_eta ? json(*c.threshold_eta) : json(nullptr);
  j["grid_threshold_eta"] = c.grid_threshold_eta ? json(*c.grid_threshold_eta) : json(nullptr);
  j["curve"] = std::move(pts);
  return j;
}

inline void write_curve_csv(std::ostream& out, const SensitivityCurve& c) {
  out << "eta,D,p_value\n";
  for (std::size_t i = 0; i < c.etas.size(); ++i)
    out << csv::format_double(c.etas[i]) << ',' << csv::format_double(c.statistics[i]) << ','
        << csv::format_double(c.p_values[i]) << '\n';
}

inline json to_json(const CalibrationResult& r) {
  return {{"n_sims", r.n_sims},
          {"rejection_rate", r.rejection_rate},
          {"mean_D", r.mean_statistic},
          {"var_D", r.var_statistic}};
}

// ---------------------------------------------------------------- two-phase

inline json to_json(const GeoPost& p) {
  return {{"post_id", p.post_id.str()},   {"account_id", p.account_id.str()},
          {"timestamp", format_iso8601(p.timestamp)},
          {"lat", p.lat},                 {"lon", p.lon},
          {"source", to_string(p.source)}, {"has_gps", p.has_gps},
          {"country", p.country},         {"bot_flag", p.bot_flag}};
}

inline GeoPost geo_post_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("record is not a JSON object");
  auto field = [&](const char* name) -> const json& {
    auto it = j.find(name);
    if (it == j.end()) throw ParseError(std::string("missing field '") + name + "'");
    return *it;
  };
  try {
    GeoPost p;
    p.post_id = PostId(field("post_id").get<std::string>());
    p.account_id = AccountId(field("account_id").get<std::string>());
    const json& ts = field("timestamp");
    p.timestamp = ts.is_number() ? ts.get<double>() : parse_iso8601(ts.get<std::string>());
    p.lat = field("lat").get<double>();
    p.lon = field("lon").get<double>();
    p.source = parse_post_source(field("source").get<std::string>());
    p.has_gps = field("has_gps").get<bool>();
    p.country = field("country").get<std::string>();
    p.bot_flag = field("bot_flag").get<bool>();
    if (!geo::valid(p.position())) throw ParseError("coordinates out of range");
    return p;
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  }
}

inline Loaded<GeoPost> read_geo_posts(std::istream& in) {
  Loaded<GeoPost> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.items.push_back(geo_post_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      out.errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      out.errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline Loaded<GeoPost> read_geo_posts(const std::string& path) {
  auto in = open_in(path);
  return read_geo_posts(in);
}

inline void write_geo_posts(std::ostream& out, const std::vector<GeoPost>& posts) {
  for (const auto& p : posts) out << to_json(p).dump() << '\n';
}

inline std::vector<GazetteerEntry> read_gazetteer(std::istream& in) {
  const csv::Table t = csv::read(in);
  t.require({"address_id", "lat", "lon", "address_type"});
  const std::size_t ic = t.column("address_id"), lc = t.column("lat"), oc = t.column("lon"),
                    tc = t.column("address_type");
  std::vector<GazetteerEntry> out;
  std::set<std::string> seen;
  for (const auto& row : t.rows()) {
    GazetteerEntry e;
    e.address_id = row.fields[ic];
    if (e.address_id.empty()) throw ParseError("line " + std::to_string(row.line) + ": empty address_id");
    if (!seen.insert(e.address_id).second)
      throw ParseError("line " + std::to_string(row.line) + ": duplicate address_id '" + e.address_id + "'");
    e.lat = csv::to_double(row.fields[lc], row.line, "lat");
    e.lon = csv::to_double(row.fields[oc], row.line, "lon");
    if (!geo::valid(e.position())) throw ParseError("line " + std::to_string(row.line) + ": coordinates out of range");
    try {
      e.address_type = parse_address_type(row.fields[tc]);
    } catch (const ParseError& err) {
      throw ParseError("line " + std::to_string(row.line) + ": " + err.what());
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<GazetteerEntry> read_gazetteer(const std::string& path) {
  auto in = open_in(path);
  try {
    return read_gazetteer(in);
  } catch (const ParseError& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

inline void write_gazetteer(std::ostream& out, const std::vector<GazetteerEntry>& g) {
  out << "address_id,lat,lon,address_type\n";
  for (const auto& e : g)
    out << csv::join({e.address_id, csv::format_double(e.lat), csv::format_double(e.lon), to_string(e.address_type)})
        << '\n';
}

inline json to_json(const PseudoSurveyRecord& r) {
  json j{{"account_id", r.account_id.str()}};
  if (r.residence)
    j["residence"] = {{"address_id", r.residence->address_id},
                      {"centroid", {{"lat", r.residence->centroid.lat}, {"lon", r.residence->centroid.lon}}}};
  else
    j["residence"] = nullptr;
  j["span_label"] = r.span_label ? json(to_string(*r.span_label)) : json(nullptr);
  j["n_posts"] = r.n_posts;
  j["n_clusters"] = r.n_clusters;
  j["provenance"] = r.provenance;
  return j;
}

inline PseudoSurveyRecord record_from_json(const json& j) {
  try {
    PseudoSurveyRecord r;
    r.account_id = AccountId(j.at("account_id").get<std::string>());
    const json& res = j.at("residence");
    if (!res.is_null())
      r.residence = Residence{res.at("address_id").get<std::string>(),
                              {res.at("centroid").at("lat").get<double>(), res.at("centroid").at("lon").get<double>()}};
    const json& span = j.at("span_label");
    if (!span.is_null()) r.span_label = parse_span_label(span.get<std::string>());
    r.n_posts = j.at("n_posts").get<std::size_t>();
    r.n_clusters = j.at("n_clusters").get<std::size_t>();
    if (j.contains("provenance")) r.provenance = j.at("provenance").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("pseudo survey record: ") + e.what());
  }
}

inline void write_records(std::ostream& out, const std::vector<PseudoSurveyRecord>& records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

/// Strict: any malformed line is fatal, since records are our own output.
inline std::vector<PseudoSurveyRecord> read_records(const std::string& path) {
  auto in = open_in(path);
  std::vector<PseudoSurveyRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(path + " line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw ParseError(path + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline json to_json(const PipelineErrorReport& r) {
  return {{"removed_bots", r.removed_bots},
          {"removed_no_gps", r.removed_no_gps},
          {"removed_non_country", r.removed_non_country},
          {"removed_privacy", r.removed_privacy},
          {"duplicates_merged", r.duplicates_merged},
          {"invalid_cluster_posts", r.invalid_cluster_posts},
          {"accounts_without_residence", r.accounts_without_residence}};
}

// ---------------------------------------------------------------- simulator

inline sim::SimConfig sim_config_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("simulation config must be a JSON object");
  sim::SimConfig c;
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    auto range = [&](const char* key, sim::IntRange& r) {
      if (!j.contains(key)) return;
      const json& v = j.at(key);
      if (v.is_number_integer()) {
        r.min = r.max = v.get<std::int64_t>();
      } else {
        r.min = v.at("min").get<std::int64_t>();
        r.max = v.at("max").get<std::int64_t>();
      }
    };
    static const std::set<std::string> known{
        "seed", "n_users", "n_offline", "accounts_per_user", "posts_per_account", "sentiment_posts_per_month",
        "home_noise_sd", "away_fraction", "bot_fraction", "flag_bots", "non_person_fraction", "months",
        "start_month", "country", "center_lat", "center_lon", "address_spacing_m", "residential_share",
        "commercial_share", "broker_share", "duplicate_fraction", "no_gps_fraction", "foreign_fraction",
        "y_negative", "y_neutral", "sentiment_fidelity"};
    for (const auto& [k, v] : j.items())
      if (!known.contains(k)) throw ParseError("unknown simulation config field '" + k + "'");
    get("seed", c.seed);
    get("n_users", c.n_users);
    get("n_offline", c.n_offline);
    range("accounts_per_user", c.accounts_per_user);
    range("posts_per_account", c.posts_per_account);
    range("sentiment_posts_per_month", c.sentiment_posts_per_month);
    get("home_noise_sd", c.home_noise_sd);
    get("away_fraction", c.away_fraction);
    get("bot_fraction", c.bot_fraction);
    get("flag_bots", c.flag_bots);
    get("non_person_fraction", c.non_person_fraction);
    get("months", c.months);
    get("start_month", c.start_month);
    get("country", c.country);
    get("center_lat", c.center_lat);
    get("center_lon", c.center_lon);
    get("address_spacing_m", c.address_spacing_m);
    get("residential_share", c.residential_share);
    get("commercial_share", c.commercial_share);
    get("broker_share", c.broker_share);
    get("duplicate_fraction", c.duplicate_fraction);
    get("no_gps_fraction", c.no_gps_fraction);
    get("foreign_fraction", c.foreign_fraction);
    get("y_negative", c.y_negative);
    get("y_neutral", c.y_neutral);
    get("sentiment_fidelity", c.sentiment_fidelity);
  } catch (const json::exception& e) {
    throw ParseError(std::string("simulation config: ") + e.what());
  }
  return c;
}

inline json to_json(const sim::SimConfig& c) {
  return {{"seed", c.seed},
          {"n_users", c.n_users},
          {"n_offline", c.n_offline},
          {"accounts_per_user", {{"min", c.accounts_per_user.min}, {"max", c.accounts_per_user.max}}},
          {"posts_per_account", {{"min", c.posts_per_account.min}, {"max", c.posts_per_account.max}}},
          {"sentiment_posts_per_month",
           {{"min", c.sentiment_posts_per_month.min}, {"max", c.sentiment_posts_per_month.max}}},
          {"home_noise_sd", c.home_noise_sd},
          {"away_fraction", c.away_fraction},
          {"bot_fraction", c.bot_fraction},
          {"flag_bots", c.flag_bots},
          {"non_person_fraction", c.non_person_fraction},
          {"months", c.months},
          {"start_month", c.start_month},
          {"country", c.country},
          {"center_lat", c.center_lat},
          {"center_lon", c.center_lon},
          {"address_spacing_m", c.address_spacing_m},
          {"residential_share", c.residential_share},
          {"commercial_share", c.commercial_share},
          {"broker_share", c.broker_share},
          {"duplicate_fraction", c.duplicate_fraction},
          {"no_gps_fraction", c.no_gps_fraction},
          {"foreign_fraction", c.foreign_fraction},
          {"y_negative", c.y_negative},
          {"y_neutral", c.y_neutral},
          {"sentiment_fidelity", c.sentiment_fidelity}};
}

/// Uses the sorted-map JSON type: the relation maps get large and the
/// insertion-ordered type looks keys up linearly.
inline nlohmann::json to_json(const sim::GroundTruth& gt) {
  using json = nlohmann::json;
  json j;
  json reg = json::array();
  for (const auto& u : gt.register_.members) reg.push_back(u.str());
  j["register"] = std::move(reg);
  json a2u = json::object();
  for (const auto& [a, u] : gt.rel.account_to_user()) a2u[a.str()] = u.str();
  j["account_to_user"] = std::move(a2u);
  json p2a = json::object();
  for (const auto& [p, a] : gt.rel.post_to_account()) p2a[p.str()] = a.str();
  j["post_to_account"] = std::move(p2a);
  json homes = json::object();
  for (const auto& [a, h] : gt.homes) homes[a.str()] = {{"lat", h.lat}, {"lon", h.lon}, {"address_id", h.address_id}};
  j["homes"] = std::move(homes);
  json y = json::object();
  for (const auto& [u, v] : gt.y_values) y[u.str()] = v;
  j["y_values"] = std::move(y);
  json np = json::array();
  for (const auto& a : gt.non_person_accounts) np.push_back(a.str());
  j["non_person_accounts"] = std::move(np);
  json bots = json::array();
  for (const auto& a : gt.bot_accounts) bots.push_back(a.str());
  j["bot_accounts"] = std::move(bots);
  return j;
}

inline sim::GroundTruth ground_truth_from_json(const nlohmann::json& j) {
  sim::GroundTruth gt;
  try {
    for (const auto& u : j.at("register")) gt.register_.members.insert(UserId(u.get<std::string>()));
    for (const auto& [a, u] : j.at("account_to_user").items())
      gt.rel.link_account(AccountId(a), UserId(u.get<std::string>()));
    for (const auto& [p, a] : j.at("post_to_account").items())
      gt.rel.link_post(PostId(p), AccountId(a.get<std::string>()));
    for (const auto& [a, h] : j.at("homes").items())
      gt.homes.emplace(AccountId(a),
                       sim::Home{h.at("lat").get<double>(), h.at("lon").get<double>(),
                                 h.at("address_id").get<std::string>()});
    for (const auto& [u, v] : j.at("y_values").items()) gt.y_values.emplace(UserId(u), v.get<double>());
    for (const auto& a : j.at("non_person_accounts")) gt.non_person_accounts.insert(AccountId(a.get<std::string>()));
    for (const auto& a : j.at("bot_accounts")) gt.bot_accounts.insert(AccountId(a.get<std::string>()));
  } catch (const json::exception& e) {
    throw ParseError(std::string("ground truth: ") + e.what());
  }
  return gt;
}

inline json to_json(const QualityReport& q) {
  return {{"records", q.records},
          {"records_with_residence", q.records_with_residence},
          {"unresolved_accounts", q.unresolved_accounts},
          {"observed_users", q.observed_users},
          {"register_size", q.register_size},
          {"in_scope", q.in_scope},
          {"under_coverage", q.under_coverage},
          {"over_coverage", q.over_coverage},
          {"duplicate_users", q.duplicate_users},
          {"duplicate_accounts", q.duplicate_accounts},
          {"non_person_records", q.non_person_records},
          {"bot_records", q.bot_records},
          {"person_records_without_residence", q.person_records_without_residence},
          {"mapping_errors", q.mapping_errors},
          {"mapping_error_rate", q.mapping_error_rate}};
}

}  // namespace smstat::io
