#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "smstat/numkit.hpp"
#include "smstat/two_phase.hpp"

using namespace smstat;

namespace {

constexpr double lat0 = 52.0, lon0 = 5.0;

GeoPost gp(const std::string& id, const std::string& account, double lat = lat0, double lon = lon0,
           Instant ts = 0.0) {
  GeoPost p;
  p.post_id = PostId(id);
  p.account_id = AccountId(account);
  p.timestamp = ts;
  p.lat = lat;
  p.lon = lon;
  p.country = "NL";
  return p;
}

std::set<std::set<std::string>> as_sets(const std::vector<Cluster>& cs) {
  std::set<std::set<std::string>> out;
  for (const auto& c : cs) {
    std::set<std::string> s;
    for (const auto& id : c.member_post_ids) s.insert(id.value);
    out.insert(s);
  }
  return out;
}

std::vector<GeoPost> blob(const std::string& prefix, const std::string& account, geo::LatLon center,
                          std::size_t n, double sd, numkit::Rng& rng, Instant ts0 = 0.0) {
  std::vector<GeoPost> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = geo::offset_m(center, numkit::sample_normal(rng, 0.0, sd), numkit::sample_normal(rng, 0.0, sd));
    out.push_back(gp(prefix + std::to_string(i), account, p.lat, p.lon, ts0 + static_cast<double>(i) * 3600.0));
  }
  return out;
}

}  // namespace

TEST(MergeClean, DuplicateKeepsBrokerCopy) {
  GeoPost api = gp("p1", "a1");
  api.lat = 52.1;
  const GeoPost broker = gp("p1", "a1");
  const std::vector<GeoPost> apis{api}, brokers{broker};
  const MergeResult r = merge_clean(apis, brokers, "NL");
  ASSERT_EQ(r.clean.size(), 1u);
  EXPECT_EQ(r.clean[0].source, PostSource::broker);
  EXPECT_EQ(r.clean[0].lat, lat0);
  EXPECT_EQ(r.report.duplicates_merged, 1u);
}

TEST(MergeClean, PrivacyRuleDropsApiOnlyAccounts) {
  const std::vector<GeoPost> apis{gp("p1", "a1"), gp("p2", "a2")};
  const std::vector<GeoPost> brokers{gp("p3", "a1")};
  const MergeResult r = merge_clean(apis, brokers, "NL");
  ASSERT_EQ(r.clean.size(), 2u);
  for (const auto& p : r.clean) EXPECT_EQ(p.account_id.value, "a1");
  EXPECT_EQ(r.report.removed_privacy, 1u);
}

TEST(MergeClean, FirstFailingRuleIsTallied) {
  GeoPost bot_no_gps = gp("p1", "a1");
  bot_no_gps.bot_flag = true;
  bot_no_gps.has_gps = false;
  GeoPost foreign_no_gps = gp("p2", "a1");
  foreign_no_gps.has_gps = false;
  foreign_no_gps.country = "BE";
  GeoPost foreign = gp("p3", "a1");
  foreign.country = "BE";
  const std::vector<GeoPost> brokers{bot_no_gps, foreign_no_gps, foreign, gp("p4", "a1")};
  const MergeResult r = merge_clean({}, brokers, "NL");
  EXPECT_EQ(r.report.removed_bots, 1u);
  EXPECT_EQ(r.report.removed_no_gps, 1u);
  EXPECT_EQ(r.report.removed_non_country, 1u);
  EXPECT_EQ(r.clean.size(), 1u);
}

TEST(MergeClean, InvalidCoordinatesRejectedWithSource) {
  const std::vector<GeoPost> apis{gp("p1", "a1", 95.0, 0.0)};
  const MergeResult r = merge_clean(apis, {}, "NL");
  EXPECT_TRUE(r.clean.empty());
  ASSERT_EQ(r.rejects.size(), 1u);
  EXPECT_EQ(r.rejects[0].source, "api:1");
  EXPECT_EQ(r.report.removed_total(), 0u);
}

TEST(MergeClean, MatchesRuleByRuleOracleAndIsIdempotent) {
  numkit::Rng rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<GeoPost> apis, brokers;
    for (int i = 0; i < 50; ++i) {
      GeoPost p = gp("p" + std::to_string(i), "a" + std::to_string(rng.uniform_int(0, 6)));
      p.bot_flag = rng.bernoulli(0.1);
      p.has_gps = !rng.bernoulli(0.1);
      p.country = rng.bernoulli(0.1) ? "DE" : "NL";
      p.timestamp = static_cast<double>(rng.uniform_int(0, 1000));
      const double u = rng.uniform();
      if (u < 0.4) apis.push_back(p);
      else if (u < 0.8) brokers.push_back(p);
      else {
        apis.push_back(p);
        brokers.push_back(p);
      }
    }
    const MergeResult r = merge_clean(apis, brokers, "NL");

    // oracle: decide each post_id on its own
    auto ok = [](const GeoPost& p) { return !p.bot_flag && p.has_gps && p.country == "NL"; };
    std::set<std::string> broker_ids, accounts_with_broker;
    for (const auto& p : brokers) {
      broker_ids.insert(p.post_id.value);
      if (ok(p)) accounts_with_broker.insert(p.account_id.value);
    }
    std::set<std::string> expected, seen;
    std::size_t dups = 0;
    for (const auto* list : {&brokers, &apis})
      for (const auto& p : *list) {
        if (!seen.insert(p.post_id.value).second) {
          ++dups;
          continue;
        }
        const bool from_broker = broker_ids.contains(p.post_id.value);
        if (ok(p) && (from_broker || accounts_with_broker.contains(p.account_id.value)))
          expected.insert(p.post_id.value);
      }
    std::set<std::string> got;
    for (const auto& p : r.clean) got.insert(p.post_id.value);
    EXPECT_EQ(got, expected);
    EXPECT_EQ(r.report.duplicates_merged, dups);
    EXPECT_EQ(r.clean.size() + r.report.removed_total(), apis.size() + brokers.size());
    EXPECT_TRUE(std::is_sorted(r.clean.begin(), r.clean.end(), geo_post_order));

    // re-cleaning the output (fed back as two sources split by origin) changes nothing
    std::vector<GeoPost> api2, broker2;
    for (const auto& p : r.clean) (p.source == PostSource::api ? api2 : broker2).push_back(p);
    const MergeResult again = merge_clean(api2, broker2, "NL");
    EXPECT_EQ(again.clean, r.clean);
    EXPECT_EQ(again.report.removed_total(), 0u);
  }
}

TEST(DbscanAccount, CoincidentPointsFormOneCluster) {
  const std::vector<GeoPost> posts{gp("p3", "a"), gp("p1", "a"), gp("p2", "a")};
  const auto cs = dbscan_account(posts, 50.0, 3);
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_TRUE(cs[0].valid);
  EXPECT_EQ(cs[0].member_post_ids, (std::vector<PostId>{PostId("p1"), PostId("p2"), PostId("p3")}));
  EXPECT_NEAR(cs[0].centroid.lat, lat0, 1e-12);
  EXPECT_NEAR(cs[0].centroid.lon, lon0, 1e-12);
}

TEST(DbscanAccount, IsolatedPointsAreNoise) {
  const auto far = geo::offset_m({lat0, lon0}, 1000.0, 0.0);
  const std::vector<GeoPost> posts{gp("p1", "a"), gp("p2", "a", far.lat, far.lon)};
  EXPECT_TRUE(dbscan_account(posts, 100.0, 2).empty());
  EXPECT_TRUE(dbscan_account({}, 100.0, 2).empty());
}

TEST(DbscanAccount, TwoBlobsMatchReference) {
  numkit::Rng rng(41);
  auto posts = blob("x", "a", {lat0, lon0}, 20, 10.0, rng);
  const auto b = blob("y", "a", geo::offset_m({lat0, lon0}, 2000.0, 500.0), 8, 10.0, rng);
  posts.insert(posts.end(), b.begin(), b.end());
  const auto cs = dbscan_account(posts, 50.0, 3);
  ASSERT_EQ(cs.size(), 2u);
  EXPECT_EQ(cs[0].size(), 20u);
  EXPECT_EQ(cs[1].size(), 8u);
  std::vector<oracle::Pt> pts;
  for (const auto& p : posts) pts.push_back({p.post_id.value, p.lat, p.lon});
  EXPECT_EQ(as_sets(cs), oracle::reference_dbscan(pts, 50.0, 3));
}

TEST(DbscanAccount, PermutationInvariantAndMatchesReference) {
  numkit::Rng rng(43);
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<GeoPost> posts;
    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 120));
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = geo::offset_m({lat0, lon0}, rng.uniform(-400.0, 400.0), rng.uniform(-400.0, 400.0));
      posts.push_back(gp("q" + std::to_string(i), "a", p.lat, p.lon));
    }
    const double eps = rng.uniform(20.0, 120.0);
    const std::size_t mp = static_cast<std::size_t>(rng.uniform_int(1, 6));
    const auto base = dbscan_account(posts, eps, mp);
    std::vector<oracle::Pt> pts;
    for (const auto& p : posts) pts.push_back({p.post_id.value, p.lat, p.lon});
    EXPECT_EQ(as_sets(base), oracle::reference_dbscan(pts, eps, mp));
    std::mt19937_64 shuffler(static_cast<std::uint64_t>(rep));
    std::shuffle(posts.begin(), posts.end(), shuffler);
    const auto shuffled = dbscan_account(posts, eps, mp);
    ASSERT_EQ(base.size(), shuffled.size());
    for (std::size_t i = 0; i < base.size(); ++i) EXPECT_EQ(base[i].member_post_ids, shuffled[i].member_post_ids);
  }
}

TEST(DbscanAccount, ParameterErrors) {
  const std::vector<GeoPost> posts{gp("p1", "a"), gp("p2", "b")};
  EXPECT_THROW(dbscan_account(posts, 0.0, 3), ParameterError);
  EXPECT_THROW(dbscan_account(posts, 10.0, 0), ParameterError);
  EXPECT_THROW(dbscan_account(posts, 10.0, 1), ParameterError);  // mixed accounts
}

TEST(Classify, ExactAndMeanCentroid) {
  const std::vector<GazetteerEntry> gaz{{"h1", lat0, lon0, AddressType::residential},
                                        {"h2", 52.01, 5.01, AddressType::commercial}};
  const std::vector<GeoPost> posts{gp("p1", "a"), gp("p2", "a"), gp("p3", "a")};
  Cluster c = classify_cluster(dbscan_account(posts, 10.0, 3).at(0), gaz);
  EXPECT_EQ(c.address_type, AddressType::residential);
  EXPECT_EQ(c.address_id, "h1");

  // centroid is the unweighted mean of the members
  const auto n = geo::offset_m({lat0, lon0}, 30.0, 0.0), s = geo::offset_m({lat0, lon0}, -30.0, 0.0);
  const std::vector<GeoPost> spread{gp("p1", "a", n.lat, n.lon), gp("p2", "a", s.lat, s.lon), gp("p3", "a")};
  const auto cs = dbscan_account(spread, 40.0, 2);
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_NEAR(cs[0].centroid.lat, (n.lat + s.lat + lat0) / 3.0, 1e-12);
}

TEST(Classify, NearestMatchesLinearScan) {
  numkit::Rng rng(47);
  std::vector<GazetteerEntry> gaz;
  for (int i = 0; i < 200; ++i) {
    const auto p = geo::offset_m({lat0, lon0}, rng.uniform(-3000.0, 3000.0), rng.uniform(-3000.0, 3000.0));
    gaz.push_back({"e" + std::to_string(1000 + i), p.lat, p.lon,
                   static_cast<AddressType>(rng.uniform_int(0, 2))});
  }
  for (int q = 0; q < 100; ++q) {
    const auto where = geo::offset_m({lat0, lon0}, rng.uniform(-3500.0, 3500.0), rng.uniform(-3500.0, 3500.0));
    std::size_t best = 0;
    for (std::size_t i = 1; i < gaz.size(); ++i)
      if (oracle::haversine(where.lat, where.lon, gaz[i].lat, gaz[i].lon) <
          oracle::haversine(where.lat, where.lon, gaz[best].lat, gaz[best].lon))
        best = i;
    EXPECT_EQ(nearest_entry(where, gaz), best);
  }
  EXPECT_THROW(nearest_entry({lat0, lon0}, {}), ConfigurationError);
}

TEST(Classify, TieGoesToSmallestId) {
  // two entries at the same spot are exactly equidistant from any query
  const std::vector<GazetteerEntry> gaz{{"b", lat0, lon0, AddressType::commercial},
                                        {"a", lat0, lon0, AddressType::residential}};
  EXPECT_EQ(gaz[nearest_entry({52.001, 5.002}, gaz)].address_id, "a");
}

namespace {

Cluster make_cluster(std::size_t n, AddressType type, Instant first, const std::string& id_prefix) {
  Cluster c;
  for (std::size_t i = 0; i < n; ++i) c.member_post_ids.push_back(PostId(id_prefix + std::to_string(i)));
  c.valid = true;
  c.address_type = type;
  c.first_timestamp = c.last_timestamp = first;
  return c;
}

}  // namespace

TEST(SelectDominant, LargestResidential) {
  const std::vector<Cluster> cs{make_cluster(5, AddressType::residential, 10, "a"),
                                make_cluster(3, AddressType::residential, 0, "b")};
  EXPECT_EQ(select_dominant(cs)->size(), 5u);
  EXPECT_TRUE(select_dominant(cs)->dominant);
}

TEST(SelectDominant, CommercialOnlyHasNone) {
  const std::vector<Cluster> cs{make_cluster(9, AddressType::commercial, 0, "a"),
                                make_cluster(4, AddressType::other, 0, "b")};
  EXPECT_FALSE(select_dominant(cs));
}

TEST(SelectDominant, TieGoesToEarliest) {
  const std::vector<Cluster> cs{make_cluster(4, AddressType::residential, 500, "a"),
                                make_cluster(4, AddressType::residential, 100, "b")};
  EXPECT_EQ(select_dominant(cs)->first_timestamp, 100);
  const std::vector<Cluster> same_time{make_cluster(4, AddressType::residential, 0, "z"),
                                       make_cluster(4, AddressType::residential, 0, "m")};
  EXPECT_EQ(select_dominant(same_time)->member_post_ids.front().value, "m0");
}

TEST(SelectDominant, InvalidIgnored) {
  Cluster big = make_cluster(10, AddressType::residential, 0, "a");
  big.valid = false;
  const std::vector<Cluster> cs{big, make_cluster(3, AddressType::residential, 0, "b")};
  EXPECT_EQ(select_dominant(cs)->size(), 3u);
}

TEST(LabelSpan, Boundary) {
  Cluster c = make_cluster(2, AddressType::residential, 0, "a");
  c.last_timestamp = 30.9 * seconds_per_day;
  EXPECT_EQ(label_span(c).span_label, SpanLabel::short_term);
  c.last_timestamp = 31.0 * seconds_per_day;
  EXPECT_EQ(label_span(c).span_label, SpanLabel::long_term);
  Cluster single = make_cluster(1, AddressType::residential, 1234, "s");
  EXPECT_EQ(label_span(single).span_days, 0.0);
  EXPECT_EQ(label_span(single).span_label, SpanLabel::short_term);
}

TEST(PseudoSurvey, EmptyInput) {
  const std::vector<GazetteerEntry> gaz{{"h1", lat0, lon0, AddressType::residential}};
  const auto r = build_pseudo_survey({}, gaz, 100.0, 3);
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(r.report, PipelineErrorReport{});
}

TEST(PseudoSurvey, SingleAccountResidence) {
  numkit::Rng rng(53);
  const std::vector<GazetteerEntry> gaz{{"h1", lat0, lon0, AddressType::residential},
                                        {"h2", 52.02, 5.0, AddressType::commercial}};
  auto posts = blob("p", "a1", {lat0, lon0}, 6, 5.0, rng);
  const auto work = blob("w", "a1", {52.02, 5.0}, 9, 5.0, rng, 40 * seconds_per_day);
  posts.insert(posts.end(), work.begin(), work.end());
  posts.push_back(gp("stray", "a1", 52.1, 5.1));
  std::sort(posts.begin(), posts.end(), geo_post_order);
  const auto r = build_pseudo_survey(posts, gaz, 100.0, 3);
  ASSERT_EQ(r.records.size(), 1u);
  const auto& rec = r.records[0];
  ASSERT_TRUE(rec.residence);
  EXPECT_EQ(rec.residence->address_id, "h1");
  EXPECT_EQ(rec.span_label, SpanLabel::short_term);
  EXPECT_EQ(rec.n_posts, 16u);
  EXPECT_EQ(rec.n_clusters, 2u);
  EXPECT_EQ(r.report.invalid_cluster_posts, 1u);
  EXPECT_FALSE(rec.provenance.empty());
}

TEST(PseudoSurvey, PostCountsAddUp) {
  numkit::Rng rng(59);
  std::vector<GazetteerEntry> gaz;
  for (int i = 0; i < 30; ++i) {
    const auto p = geo::offset_m({lat0, lon0}, 300.0 * (i / 6), 300.0 * (i % 6));
    gaz.push_back({"h" + std::to_string(i), p.lat, p.lon, i % 3 ? AddressType::residential : AddressType::other});
  }
  std::vector<GeoPost> posts;
  for (int a = 0; a < 15; ++a) {
    const auto& home = gaz[static_cast<std::size_t>(rng.uniform_int(0, 29))];
    auto b = blob("a" + std::to_string(a) + "p", "acct" + std::to_string(a), home.position(),
                  static_cast<std::size_t>(rng.uniform_int(1, 10)), 8.0, rng);
    posts.insert(posts.end(), b.begin(), b.end());
  }
  std::sort(posts.begin(), posts.end(), geo_post_order);
  const auto r = build_pseudo_survey(posts, gaz, 100.0, 3);
  std::size_t total = 0, without = 0;
  for (const auto& rec : r.records) {
    total += rec.n_posts;
    if (!rec.residence) ++without;
  }
  EXPECT_EQ(total, posts.size());
  EXPECT_EQ(r.records.size(), 15u);
  EXPECT_EQ(r.report.accounts_without_residence, without);
  EXPECT_THROW(build_pseudo_survey(posts, {}, 100.0, 3), ConfigurationError);
}
