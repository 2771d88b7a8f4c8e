#pragma once

// Compares a pseudo survey dataset with simulator ground truth:
// representation (coverage of the register, duplicates, non-persons) and
// measurement (residence assigned to the wrong address).

#include <cstddef>
#include <span>

#include "smstat/population.hpp"
#include "smstat/simulator.hpp"
#include "smstat/two_phase.hpp"

namespace smstat {

struct QualityReport {
  std::size_t records = 0;
  std::size_t records_with_residence = 0;
  std::size_t unresolved_accounts = 0;  // record accounts unknown to ground truth

  // representation
  std::size_t observed_users = 0;  // |s_AP|
  std::size_t register_size = 0;
  std::size_t in_scope = 0;
  std::size_t under_coverage = 0;
  std::size_t over_coverage = 0;
  std::size_t duplicate_users = 0;     // users behind >= 2 observed accounts
  std::size_t duplicate_accounts = 0;  // accounts beyond the first per user
  std::size_t non_person_records = 0;
  std::size_t bot_records = 0;

  // measurement
  std::size_t person_records_without_residence = 0;
  std::size_t mapping_errors = 0;  // residence != true home
  double mapping_error_rate = 0.0;  // over person records with a residence
};

inline QualityReport compare_with_truth(std::span<const PseudoSurveyRecord> records, const sim::GroundTruth& gt) {
  QualityReport q;
  q.records = records.size();
  q.register_size = gt.register_.size();

  IdSet<AccountId> accounts;
  std::size_t judged = 0;
  for (const auto& r : records) {
    accounts.insert(r.account_id);
    if (r.residence) ++q.records_with_residence;
    if (gt.non_person_accounts.contains(r.account_id)) ++q.non_person_records;
    if (gt.bot_accounts.contains(r.account_id)) ++q.bot_records;
    auto home = gt.homes.find(r.account_id);
    if (home == gt.homes.end()) continue;
    if (!r.residence) {
      ++q.person_records_without_residence;
      continue;
    }
    ++judged;
    if (r.residence->address_id != home->second.address_id) ++q.mapping_errors;
  }
  q.mapping_error_rate = judged == 0 ? 0.0 : static_cast<double>(q.mapping_errors) / static_cast<double>(judged);

  // Coverage is judged only on accounts the records actually reached.
  const UserResolution users = resolve_users(accounts, gt.rel);
  q.unresolved_accounts = users.unresolved.size();
  q.observed_users = users.users.size();
  RelationTable observed;
  for (const auto& a : accounts)
    if (const UserId* u = gt.rel.user_of(a)) observed.link_account(a, *u);
  const CoverageReport cov = coverage_report(users.users, gt.register_, observed);
  q.in_scope = cov.in_scope.size();
  q.under_coverage = cov.under.size();
  q.over_coverage = cov.over.size();
  q.duplicate_users = cov.duplicate_users.size();
  for (const auto& [u, n] : cov.duplicate_users) q.duplicate_accounts += n - 1;
  return q;
}

}  // namespace smstat
