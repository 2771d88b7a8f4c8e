#pragma once

// Two-phase analysis, first phase: turn geolocated posts into a pseudo survey
// dataset with one record per account and a residence proxy.
//
//   merge_clean          two sources -> one clean post list + removal tallies
//   dbscan_account       per-account spatial clusters
//   classify_cluster     nearest gazetteer entry gives the address type
//   select_dominant      largest valid residential cluster
//   label_span           short_term (< 31 days) / long_term
//   build_pseudo_survey  all of the above, per account

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "smstat/dbscan.hpp"
#include "smstat/error.hpp"
#include "smstat/geo.hpp"
#include "smstat/population.hpp"
#include "smstat/timeutil.hpp"

namespace smstat {

enum class PostSource { api, broker };
enum class AddressType { residential, commercial, other };
enum class SpanLabel { short_term, long_term };

inline std::string_view to_string(PostSource s) { return s == PostSource::api ? "api" : "broker"; }
inline std::string_view to_string(AddressType t) {
  switch (t) {
    case AddressType::residential: return "residential";
    case AddressType::commercial: return "commercial";
    default: return "other";
  }
}
inline std::string_view to_string(SpanLabel s) { return s == SpanLabel::short_term ? "short_term" : "long_term"; }

inline PostSource parse_post_source(std::string_view s) {
  if (s == "api") return PostSource::api;
  if (s == "broker") return PostSource::broker;
  throw ParseError("unknown post source '" + std::string(s) + "'");
}
inline AddressType parse_address_type(std::string_view s) {
  if (s == "residential") return AddressType::residential;
  if (s == "commercial") return AddressType::commercial;
  if (s == "other") return AddressType::other;
  throw ParseError("unknown address type '" + std::string(s) + "'");
}
inline SpanLabel parse_span_label(std::string_view s) {
  if (s == "short_term") return SpanLabel::short_term;
  if (s == "long_term") return SpanLabel::long_term;
  throw ParseError("unknown span label '" + std::string(s) + "'");
}

struct GeoPost {
  PostId post_id;
  AccountId account_id;
  Instant timestamp = 0.0;
  double lat = 0.0;
  double lon = 0.0;
  PostSource source = PostSource::broker;
  bool has_gps = true;
  std::string country;
  bool bot_flag = false;

  geo::LatLon position() const { return {lat, lon}; }
  friend bool operator==(const GeoPost&, const GeoPost&) = default;
};

struct GazetteerEntry {
  std::string address_id;
  double lat = 0.0;
  double lon = 0.0;
  AddressType address_type = AddressType::other;

  geo::LatLon position() const { return {lat, lon}; }
};

struct Cluster {
  AccountId account_id;
  std::vector<PostId> member_post_ids;  // ascending
  geo::LatLon centroid;
  bool valid = false;
  std::optional<AddressType> address_type;
  std::optional<std::string> address_id;  // nearest gazetteer entry
  Instant first_timestamp = 0.0;
  Instant last_timestamp = 0.0;
  double span_days = 0.0;
  SpanLabel span_label = SpanLabel::short_term;
  bool dominant = false;

  std::size_t size() const noexcept { return member_post_ids.size(); }
};

struct Residence {
  std::string address_id;
  geo::LatLon centroid;
};

struct PseudoSurveyRecord {
  AccountId account_id;
  std::optional<Residence> residence;
  std::optional<SpanLabel> span_label;  // of the dominant cluster
  std::size_t n_posts = 0;
  std::size_t n_clusters = 0;
  std::vector<std::string> provenance;
};

struct PipelineErrorReport {
  std::size_t removed_bots = 0;
  std::size_t removed_no_gps = 0;
  std::size_t removed_non_country = 0;
  std::size_t removed_privacy = 0;
  std::size_t duplicates_merged = 0;
  std::size_t invalid_cluster_posts = 0;
  std::size_t accounts_without_residence = 0;

  std::size_t removed_total() const {
    return removed_bots + removed_no_gps + removed_non_country + removed_privacy + duplicates_merged;
  }

  PipelineErrorReport& operator+=(const PipelineErrorReport& o) {
    removed_bots += o.removed_bots;
    removed_no_gps += o.removed_no_gps;
    removed_non_country += o.removed_non_country;
    removed_privacy += o.removed_privacy;
    duplicates_merged += o.duplicates_merged;
    invalid_cluster_posts += o.invalid_cluster_posts;
    accounts_without_residence += o.accounts_without_residence;
    return *this;
  }
  friend bool operator==(const PipelineErrorReport&, const PipelineErrorReport&) = default;
};

struct RejectedRecord {
  std::string source;  // where it came from, e.g. "api:12"
  std::string reason;
};

struct MergeResult {
  std::vector<GeoPost> clean;  // sorted by (account_id, timestamp, post_id)
  PipelineErrorReport report;
  std::vector<RejectedRecord> rejects;
};

inline bool geo_post_order(const GeoPost& a, const GeoPost& b) {
  if (a.account_id != b.account_id) return a.account_id < b.account_id;
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return a.post_id < b.post_id;
}

/// Merges the two sources and applies the cleaning rules in this order, each
/// removed post tallied under the first rule it fails:
///   duplicate post_id (broker copy wins) -> bot -> no GPS -> other country
///   -> api post from an account with no surviving broker post.
/// Records with invalid ids or coordinates are rejected, not counted.
inline MergeResult merge_clean(std::span<const GeoPost> api_posts, std::span<const GeoPost> broker_posts,
                               std::string_view country) {
  MergeResult out;
  std::map<PostId, GeoPost> merged;

  auto admit = [&](const GeoPost& p, PostSource source, std::size_t idx) -> std::optional<GeoPost> {
    const std::string where = std::string(to_string(source)) + ":" + std::to_string(idx + 1);
    if (p.post_id.value.empty() || p.account_id.value.empty()) {
      out.rejects.push_back({where, "empty post_id or account_id"});
      return std::nullopt;
    }
    if (!geo::valid(p.position())) {
      out.rejects.push_back({where, "coordinates out of range for post '" + p.post_id.str() + "'"});
      return std::nullopt;
    }
    GeoPost q = p;
    q.source = source;
    return q;
  };

  for (std::size_t i = 0; i < broker_posts.size(); ++i) {
    auto p = admit(broker_posts[i], PostSource::broker, i);
    if (!p) continue;
    if (!merged.emplace(p->post_id, *p).second) ++out.report.duplicates_merged;
  }
  for (std::size_t i = 0; i < api_posts.size(); ++i) {
    auto p = admit(api_posts[i], PostSource::api, i);
    if (!p) continue;
    if (!merged.emplace(p->post_id, *p).second) ++out.report.duplicates_merged;
  }

  auto passes_content_rules = [&](const GeoPost& p) {
    return !p.bot_flag && p.has_gps && p.country == country;
  };
  std::set<AccountId> broker_accounts;
  for (const auto& [id, p] : merged)
    if (p.source == PostSource::broker && passes_content_rules(p)) broker_accounts.insert(p.account_id);

  for (auto& [id, p] : merged) {
    if (p.bot_flag)
      ++out.report.removed_bots;
    else if (!p.has_gps)
      ++out.report.removed_no_gps;
    else if (p.country != country)
      ++out.report.removed_non_country;
    else if (p.source == PostSource::api && !broker_accounts.contains(p.account_id))
      ++out.report.removed_privacy;
    else
      out.clean.push_back(std::move(p));
  }
  std::sort(out.clean.begin(), out.clean.end(), geo_post_order);
  return out;
}

namespace detail {

inline void require_single_account(std::span<const GeoPost> posts) {
  for (const auto& p : posts)
    if (p.account_id != posts.front().account_id)
      throw ParameterError("dbscan_account: posts from accounts '" + posts.front().account_id.str() + "' and '" +
                           p.account_id.str() + "' mixed");
}

inline bool cluster_order(const Cluster& a, const Cluster& b) {
  if (a.size() != b.size()) return a.size() > b.size();
  if (a.first_timestamp != b.first_timestamp) return a.first_timestamp < b.first_timestamp;
  return a.member_post_ids.front() < b.member_post_ids.front();
}

}  // namespace detail

/// DBSCAN over one account's posts with haversine distance. Clusters smaller
/// than min_points (possible when border posts go to a neighbour) are kept
/// but marked invalid; noise posts belong to no cluster. Output is sorted by
/// size (desc), then earliest post, then smallest member post_id.
inline std::vector<Cluster> dbscan_account(std::span<const GeoPost> posts, double eps_meters,
                                           std::size_t min_points) {
  if (!(eps_meters > 0.0)) throw ParameterError("eps must be positive");
  if (min_points < 1) throw ParameterError("min_points must be at least 1");
  if (posts.empty()) return {};
  detail::require_single_account(posts);

  const DbscanLabels labels = dbscan<GeoPost>(
      posts, eps_meters, min_points,
      [](const GeoPost& a, const GeoPost& b) { return geo::haversine_m(a.position(), b.position()); },
      [](const GeoPost& p) -> const PostId& { return p.post_id; });

  std::vector<Cluster> clusters(labels.n_clusters);
  std::vector<double> lat_sum(labels.n_clusters, 0.0), lon_sum(labels.n_clusters, 0.0);
  for (std::size_t i = 0; i < posts.size(); ++i) {
    if (!labels.label[i]) continue;
    const std::size_t c = *labels.label[i];
    Cluster& cl = clusters[c];
    if (cl.member_post_ids.empty()) {
      cl.first_timestamp = cl.last_timestamp = posts[i].timestamp;
    } else {
      cl.first_timestamp = std::min(cl.first_timestamp, posts[i].timestamp);
      cl.last_timestamp = std::max(cl.last_timestamp, posts[i].timestamp);
    }
    cl.member_post_ids.push_back(posts[i].post_id);
    lat_sum[c] += posts[i].lat;
    lon_sum[c] += posts[i].lon;
  }
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    Cluster& cl = clusters[c];
    cl.account_id = posts.front().account_id;
    std::sort(cl.member_post_ids.begin(), cl.member_post_ids.end());
    const double n = static_cast<double>(cl.size());
    // unweighted mean: every post carries weight 1
    cl.centroid = {lat_sum[c] / n, lon_sum[c] / n};
    cl.valid = cl.size() >= min_points;
    cl.span_days = (cl.last_timestamp - cl.first_timestamp) / seconds_per_day;
  }
  std::sort(clusters.begin(), clusters.end(), detail::cluster_order);
  return clusters;
}

/// Index of the haversine-nearest entry; ties go to the smallest address_id.
inline std::size_t nearest_entry(const geo::LatLon& where, std::span<const GazetteerEntry> gazetteer) {
  if (gazetteer.empty()) throw ConfigurationError("gazetteer is empty");
  std::size_t best = 0;
  double best_d = geo::haversine_m(where, gazetteer[0].position());
  for (std::size_t i = 1; i < gazetteer.size(); ++i) {
    const double d = geo::haversine_m(where, gazetteer[i].position());
    if (d < best_d || (d == best_d && gazetteer[i].address_id < gazetteer[best].address_id)) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

/// Address type of the entry nearest the cluster centroid.
inline Cluster classify_cluster(Cluster cluster, std::span<const GazetteerEntry> gazetteer) {
  if (cluster.member_post_ids.empty()) throw ParameterError("cannot classify an empty cluster");
  const GazetteerEntry& e = gazetteer[nearest_entry(cluster.centroid, gazetteer)];
  cluster.address_type = e.address_type;
  cluster.address_id = e.address_id;
  return cluster;
}

/// Position of the dominant residential cluster in `clusters`, if any.
inline std::optional<std::size_t> dominant_index(std::span<const Cluster> clusters) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const Cluster& c = clusters[i];
    if (!c.valid || c.address_type != AddressType::residential) continue;
    if (!best || detail::cluster_order(c, clusters[*best])) best = i;
  }
  return best;
}

inline std::optional<Cluster> select_dominant(std::span<const Cluster> clusters) {
  auto i = dominant_index(clusters);
  if (!i) return std::nullopt;
  Cluster c = clusters[*i];
  c.dominant = true;
  return c;
}

inline Cluster label_span(Cluster cluster) {
  if (cluster.member_post_ids.empty()) throw ParameterError("cannot label an empty cluster");
  cluster.span_days = (cluster.last_timestamp - cluster.first_timestamp) / seconds_per_day;
  cluster.span_label = cluster.span_days < 31.0 ? SpanLabel::short_term : SpanLabel::long_term;
  return cluster;
}

struct PipelineResult {
  std::vector<PseudoSurveyRecord> records;  // ordered by account_id
  PipelineErrorReport report;
};

namespace detail {

inline std::string format_number(double v, int precision = 3) {
  std::ostringstream os;
  os.precision(precision);
  os << std::fixed << v;
  return os.str();
}

}  // namespace detail

/// One record per account in `clean`. The returned report carries only the
/// clustering-stage counts; add it to the merge_clean report for the totals.
inline PipelineResult build_pseudo_survey(std::span<const GeoPost> clean, std::span<const GazetteerEntry> gazetteer,
                                          double eps_meters, std::size_t min_points) {
  if (!(eps_meters > 0.0)) throw ParameterError("eps must be positive");
  if (min_points < 1) throw ParameterError("min_points must be at least 1");
  PipelineResult out;
  if (clean.empty()) return out;
  if (gazetteer.empty()) throw ConfigurationError("gazetteer is empty");

  std::map<AccountId, std::vector<GeoPost>> by_account;
  for (const auto& p : clean) by_account[p.account_id].push_back(p);

  for (auto& [account, posts] : by_account) {
    std::sort(posts.begin(), posts.end(), geo_post_order);
    PseudoSurveyRecord rec;
    rec.account_id = account;
    rec.n_posts = posts.size();

    std::vector<Cluster> clusters = dbscan_account(posts, eps_meters, min_points);
    rec.n_clusters = clusters.size();
    std::size_t clustered_valid = 0;
    std::size_t n_valid = 0;
    for (auto& c : clusters) {
      c = label_span(classify_cluster(std::move(c), gazetteer));
      if (c.valid) {
        ++n_valid;
        clustered_valid += c.size();
      }
    }
    out.report.invalid_cluster_posts += posts.size() - clustered_valid;

    rec.provenance.push_back("dbscan eps_m=" + detail::format_number(eps_meters, 1) +
                             " min_points=" + std::to_string(min_points));
    rec.provenance.push_back("clusters valid=" + std::to_string(n_valid) +
                             " invalid=" + std::to_string(clusters.size() - n_valid) +
                             " unclustered_or_invalid_posts=" + std::to_string(posts.size() - clustered_valid));

    if (auto d = dominant_index(clusters)) {
      Cluster& dom = clusters[*d];
      dom.dominant = true;
      rec.residence = Residence{*dom.address_id, dom.centroid};
      rec.span_label = dom.span_label;
      rec.provenance.push_back("dominant residential cluster posts=" + std::to_string(dom.size()) +
                               " span_days=" + detail::format_number(dom.span_days) + " address_id=" +
                               *dom.address_id);
    } else {
      ++out.report.accounts_without_residence;
      rec.provenance.push_back("no valid residential cluster");
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace smstat
