#pragma once

// Seeded synthetic world with known answers: a person register, platform
// users (persons and non-persons), their accounts, a gazetteer, geolocated
// posts around each account's home, and monthly sentiment posts.
//
// Error sources are switchable so each one can be checked against ground
// truth: offline persons (under-coverage), non-person users (over-coverage),
// several accounts per person (duplicates), bots, posts away from home
// (mapping errors), missing GPS, foreign country codes, api/broker split.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "smstat/error.hpp"
#include "smstat/geo.hpp"
#include "smstat/numkit.hpp"
#include "smstat/one_phase.hpp"
#include "smstat/population.hpp"
#include "smstat/timeutil.hpp"
#include "smstat/two_phase.hpp"

namespace smstat::sim {

struct IntRange {
  std::int64_t min = 1;
  std::int64_t max = 1;
};

struct SimConfig {
  std::uint64_t seed = 0;
  std::size_t n_users = 100;    // platform users, persons and non-persons
  std::size_t n_offline = 25;   // register persons with no account
  IntRange accounts_per_user{1, 2};
  IntRange posts_per_account{3, 12};
  IntRange sentiment_posts_per_month{1, 4};
  double home_noise_sd = 5.0;   // metres
  double away_fraction = 0.2;
  double bot_fraction = 0.5;    // share of non-person accounts that are bots
  bool flag_bots = true;        // whether bots carry bot_flag on their posts
  double non_person_fraction = 0.1;
  std::size_t months = 6;
  std::string start_month = "2020-01";
  std::string country = "NL";
  double center_lat = 52.0;
  double center_lon = 5.0;
  double address_spacing_m = 150.0;
  double residential_share = 0.7;
  double commercial_share = 0.2;
  double broker_share = 0.7;
  double duplicate_fraction = 0.05;
  double no_gps_fraction = 0.0;
  double foreign_fraction = 0.0;
  double y_negative = 0.3;  // P(y = -1)
  double y_neutral = 0.4;   // P(y = 0); P(y = +1) is the rest
  double sentiment_fidelity = 0.8;

  void validate() const {
    auto fraction = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) throw ParameterError(std::string(name) + " must lie in [0, 1]");
    };
    fraction(away_fraction, "away_fraction");
    fraction(bot_fraction, "bot_fraction");
    fraction(non_person_fraction, "non_person_fraction");
    fraction(residential_share, "residential_share");
    fraction(commercial_share, "commercial_share");
    fraction(broker_share, "broker_share");
    fraction(duplicate_fraction, "duplicate_fraction");
    fraction(no_gps_fraction, "no_gps_fraction");
    fraction(foreign_fraction, "foreign_fraction");
    fraction(y_negative, "y_negative");
    fraction(y_neutral, "y_neutral");
    fraction(sentiment_fidelity, "sentiment_fidelity");
    if (residential_share + commercial_share > 1.0) throw ParameterError("address type shares exceed 1");
    if (residential_share == 0.0) throw ParameterError("residential_share must be positive");
    if (y_negative + y_neutral > 1.0) throw ParameterError("y probabilities exceed 1");
    if (n_users == 0) throw ParameterError("n_users must be positive");
    if (months == 0) throw ParameterError("months must be positive");
    for (auto [r, name] : {std::pair{accounts_per_user, "accounts_per_user"},
                           std::pair{posts_per_account, "posts_per_account"},
                           std::pair{sentiment_posts_per_month, "sentiment_posts_per_month"}})
      if (r.min < 1 || r.max < r.min) throw ParameterError(std::string(name) + " needs 1 <= min <= max");
    if (!(home_noise_sd >= 0.0)) throw ParameterError("home_noise_sd must be non-negative");
    if (!(address_spacing_m > 0.0)) throw ParameterError("address_spacing_m must be positive");
    if (!geo::valid({center_lat, center_lon})) throw ParameterError("center coordinates out of range");
    if (country.empty()) throw ParameterError("country must be non-empty");
    month_start(start_month);
  }
};

struct Home {
  double lat = 0.0;
  double lon = 0.0;
  std::string address_id;
};

struct GroundTruth {
  PopulationRegister register_;
  RelationTable rel;
  std::map<AccountId, Home> homes;  // person accounts only
  std::map<UserId, double> y_values;
  IdSet<AccountId> non_person_accounts;
  IdSet<AccountId> bot_accounts;
};

struct SimOutput {
  GroundTruth truth;
  std::vector<GazetteerEntry> gazetteer;
  std::vector<GeoPost> geo_posts;  // both sources; duplicates share post_id
  std::vector<SentimentPost> sentiment_posts;
};

namespace detail {

inline std::string make_id(char prefix, std::size_t n, int width = 6) {
  std::string digits = std::to_string(n);
  if (static_cast<int>(digits.size()) < width) digits.insert(0, width - digits.size(), '0');
  return std::string(1, prefix) + digits;
}

inline int draw_three_point(numkit::Rng& rng, double p_neg, double p_zero) {
  const double u = rng.uniform();
  if (u < p_neg) return -1;
  if (u < p_neg + p_zero) return 0;
  return 1;
}

}  // namespace detail

inline SimOutput generate(const SimConfig& cfg) {
  cfg.validate();
  numkit::Rng rng(cfg.seed);
  SimOutput out;
  GroundTruth& gt = out.truth;

  // Users: the first n_users live on the platform, offline persons follow.
  std::vector<bool> is_person(cfg.n_users);
  for (std::size_t i = 0; i < cfg.n_users; ++i) is_person[i] = !rng.bernoulli(cfg.non_person_fraction);
  std::vector<UserId> users;
  for (std::size_t i = 0; i < cfg.n_users + cfg.n_offline; ++i) users.emplace_back(detail::make_id('u', i + 1));
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (i < cfg.n_users && !is_person[i]) continue;
    gt.register_.members.insert(users[i]);
    gt.y_values[users[i]] = detail::draw_three_point(rng, cfg.y_negative, cfg.y_neutral);
  }

  // Accounts.
  struct AccountPlan {
    AccountId id;
    std::size_t user;
    bool person;
    bool bot;
  };
  std::vector<AccountPlan> accounts;
  for (std::size_t i = 0; i < cfg.n_users; ++i) {
    const std::int64_t k =
        is_person[i] ? rng.uniform_int(cfg.accounts_per_user.min, cfg.accounts_per_user.max) : 1;
    for (std::int64_t j = 0; j < k; ++j) {
      AccountPlan a{AccountId(detail::make_id('a', accounts.size() + 1)), i, is_person[i], false};
      if (!a.person) a.bot = rng.bernoulli(cfg.bot_fraction);
      gt.rel.link_account(a.id, users[i]);
      if (!a.person) gt.non_person_accounts.insert(a.id);
      if (a.bot) gt.bot_accounts.insert(a.id);
      accounts.push_back(std::move(a));
    }
  }

  // Gazetteer: a jittered square grid, big enough for ~4 addresses per account.
  const std::size_t wanted = std::max<std::size_t>(16, 4 * accounts.size());
  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(wanted))));
  const geo::LatLon center{cfg.center_lat, cfg.center_lon};
  const double half = 0.5 * static_cast<double>(side - 1) * cfg.address_spacing_m;
  std::vector<std::size_t> residential, non_residential;
  for (std::size_t r = 0; r < side; ++r)
    for (std::size_t c = 0; c < side; ++c) {
      const double jitter = 0.2 * cfg.address_spacing_m;
      const double north = static_cast<double>(r) * cfg.address_spacing_m - half + rng.uniform(-jitter, jitter);
      const double east = static_cast<double>(c) * cfg.address_spacing_m - half + rng.uniform(-jitter, jitter);
      const geo::LatLon p = geo::offset_m(center, north, east);
      const double u = rng.uniform();
      const AddressType type = u < cfg.residential_share                          ? AddressType::residential
                               : u < cfg.residential_share + cfg.commercial_share ? AddressType::commercial
                                                                                  : AddressType::other;
      (type == AddressType::residential ? residential : non_residential).push_back(out.gazetteer.size());
      out.gazetteer.push_back({detail::make_id('h', out.gazetteer.size() + 1), p.lat, p.lon, type});
    }
  if (residential.empty()) {
    out.gazetteer.front().address_type = AddressType::residential;
    residential.push_back(0);
    std::erase(non_residential, 0);
  }
  auto pick = [&](const std::vector<std::size_t>& pool) {
    return pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
  };

  // Homes: one residential address per person, shared by all their accounts;
  // non-persons sit at a non-residential address when one exists.
  std::vector<std::size_t> base_of_user(cfg.n_users);
  for (std::size_t i = 0; i < cfg.n_users; ++i)
    base_of_user[i] = is_person[i] || non_residential.empty() ? pick(residential) : pick(non_residential);

  const Instant window_start = month_start(cfg.start_month);
  const Instant window_end = month_start(cfg.start_month, static_cast<int>(cfg.months));
  std::size_t geo_seq = 0;
  std::size_t sent_seq = 0;

  for (const auto& a : accounts) {
    const GazetteerEntry& home = out.gazetteer[base_of_user[a.user]];
    if (a.person) gt.homes.emplace(a.id, Home{home.lat, home.lon, home.address_id});
    // any address other than home
    std::size_t away_idx = base_of_user[a.user];
    if (out.gazetteer.size() > 1) {
      away_idx = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(out.gazetteer.size()) - 2));
      if (away_idx >= base_of_user[a.user]) ++away_idx;
    }
    const GazetteerEntry& away = out.gazetteer[away_idx];

    const std::int64_t n_posts = rng.uniform_int(cfg.posts_per_account.min, cfg.posts_per_account.max);
    for (std::int64_t k = 0; k < n_posts; ++k) {
      const GazetteerEntry& anchor = rng.bernoulli(cfg.away_fraction) ? away : home;
      const geo::LatLon p = geo::offset_m(anchor.position(), numkit::sample_normal(rng, 0.0, cfg.home_noise_sd),
                                          numkit::sample_normal(rng, 0.0, cfg.home_noise_sd));
      GeoPost post;
      post.post_id = PostId(detail::make_id('g', ++geo_seq));
      post.account_id = a.id;
      post.timestamp = std::floor(rng.uniform(window_start, window_end));
      post.lat = p.lat;
      post.lon = p.lon;
      post.source = rng.bernoulli(cfg.broker_share) ? PostSource::broker : PostSource::api;
      post.has_gps = !rng.bernoulli(cfg.no_gps_fraction);
      post.country = rng.bernoulli(cfg.foreign_fraction) ? std::string("XX") : cfg.country;
      post.bot_flag = a.bot && cfg.flag_bots;
      gt.rel.link_post(post.post_id, a.id);
      const bool duplicate = rng.bernoulli(cfg.duplicate_fraction);
      out.geo_posts.push_back(post);
      if (duplicate) {
        post.source = post.source == PostSource::api ? PostSource::broker : PostSource::api;
        out.geo_posts.push_back(post);
      }
    }

    const double y = a.person ? gt.y_values.at(users[a.user]) : 0.0;
    for (std::size_t m = 0; m < cfg.months; ++m) {
      const Instant m0 = month_start(cfg.start_month, static_cast<int>(m));
      const Instant m1 = month_start(cfg.start_month, static_cast<int>(m) + 1);
      const std::int64_t n = rng.uniform_int(cfg.sentiment_posts_per_month.min, cfg.sentiment_posts_per_month.max);
      for (std::int64_t k = 0; k < n; ++k) {
        SentimentPost s;
        s.post_id = PostId(detail::make_id('s', ++sent_seq));
        s.account_id = a.id;
        s.timestamp = std::floor(rng.uniform(m0, m1));
        const bool faithful = a.person && rng.bernoulli(cfg.sentiment_fidelity);
        s.sentiment = faithful ? static_cast<int>(y) : static_cast<int>(rng.uniform_int(-1, 1));
        gt.rel.link_post(s.post_id, a.id);
        out.sentiment_posts.push_back(std::move(s));
      }
    }
  }
  return out;
}

/// 100 * mean of y over the register.
inline double true_theta(const GroundTruth& gt) {
  if (gt.register_.members.empty()) throw DegenerateSeries("register is empty");
  double sum = 0.0;
  for (const auto& u : gt.register_.members) {
    auto it = gt.y_values.find(u);
    if (it == gt.y_values.end()) throw MissingRelation(u.str());
    sum += it->second;
  }
  return 100.0 * sum / static_cast<double>(gt.register_.members.size());
}

}  // namespace smstat::sim
