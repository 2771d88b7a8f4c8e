#pragma once

// Post -> account -> user relations and coverage accounting against a
// target-population register.
//
// The map a (post to account) and b (account to user) are many-one. Observed
// samples move along them: s_A = a(s_P), s_AP = b(s_A), and back via the
// preimage a^-1. Coverage compares s_AP with the register U.

#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "smstat/error.hpp"

namespace smstat {

/// Opaque, non-empty string identifier tagged by the universe it lives in.
template <class Tag>
struct Id {
  std::string value;

  Id() = default;
  explicit Id(std::string v) : value(std::move(v)) {
    if (value.empty()) throw ParameterError("identifiers must be non-empty");
  }

  const std::string& str() const noexcept { return value; }
  auto operator<=>(const Id&) const = default;
};

struct PostTag {};
struct AccountTag {};
struct UserTag {};

using PostId = Id<PostTag>;
using AccountId = Id<AccountTag>;
using UserId = Id<UserTag>;

template <class T>
using IdSet = std::set<T>;

class RelationTable {
public:
  /// Records a(post) = account. Re-linking a post to a different account
  /// breaks the many-one contract and throws.
  void link_post(const PostId& post, const AccountId& account) {
    auto [it, inserted] = post_to_account_.emplace(post, account);
    if (!inserted && it->second != account)
      throw ParameterError("post '" + post.str() + "' already maps to account '" + it->second.str() + "'");
  }

  void link_account(const AccountId& account, const UserId& user) {
    auto [it, inserted] = account_to_user_.emplace(account, user);
    if (!inserted && it->second != user)
      throw ParameterError("account '" + account.str() + "' already maps to user '" + it->second.str() + "'");
  }

  const std::map<PostId, AccountId>& post_to_account() const noexcept { return post_to_account_; }
  const std::map<AccountId, UserId>& account_to_user() const noexcept { return account_to_user_; }

  const AccountId* account_of(const PostId& p) const {
    auto it = post_to_account_.find(p);
    return it == post_to_account_.end() ? nullptr : &it->second;
  }
  const UserId* user_of(const AccountId& a) const {
    auto it = account_to_user_.find(a);
    return it == account_to_user_.end() ? nullptr : &it->second;
  }

private:
  std::map<PostId, AccountId> post_to_account_;
  std::map<AccountId, UserId> account_to_user_;
};

struct PopulationRegister {
  IdSet<UserId> members;

  std::size_t size() const noexcept { return members.size(); }
  bool contains(const UserId& u) const { return members.contains(u); }
};

struct CoverageReport {
  IdSet<UserId> in_scope;  // U ∩ s_AP
  IdSet<UserId> under;     // U \ s_AP
  IdSet<UserId> over;      // s_AP \ U
  std::map<UserId, std::size_t> duplicate_users;  // users behind >= 2 accounts
};

/// s_A = a(s_P). Throws MissingRelation naming the first unknown post.
inline IdSet<AccountId> accounts_of(const IdSet<PostId>& posts, const RelationTable& rel) {
  IdSet<AccountId> out;
  for (const auto& p : posts) {
    const AccountId* a = rel.account_of(p);
    if (a == nullptr) throw MissingRelation(p.str());
    out.insert(*a);
  }
  return out;
}

/// s_AP = b(s_A). Throws MissingRelation on an account with no known user.
inline IdSet<UserId> users_of(const IdSet<AccountId>& accounts, const RelationTable& rel) {
  IdSet<UserId> out;
  for (const auto& a : accounts) {
    const UserId* u = rel.user_of(a);
    if (u == nullptr) throw MissingRelation(a.str());
    out.insert(*u);
  }
  return out;
}

struct UserResolution {
  IdSet<UserId> users;
  IdSet<AccountId> unresolved;
};

/// Lenient b(s_A) for real ingestion, where the account-user link is often
/// not observable: accounts without a known user are listed, not fatal.
inline UserResolution resolve_users(const IdSet<AccountId>& accounts, const RelationTable& rel) {
  UserResolution r;
  for (const auto& a : accounts) {
    if (const UserId* u = rel.user_of(a))
      r.users.insert(*u);
    else
      r.unresolved.insert(a);
  }
  return r;
}

/// a^-1(s_A). Inactive accounts contribute nothing.
inline IdSet<PostId> posts_of(const IdSet<AccountId>& accounts, const RelationTable& rel) {
  IdSet<PostId> out;
  if (accounts.empty()) return out;
  for (const auto& [post, account] : rel.post_to_account())
    if (accounts.contains(account)) out.insert(post);
  return out;
}

inline CoverageReport coverage_report(const IdSet<UserId>& users, const PopulationRegister& reg,
                                      const RelationTable& rel) {
  CoverageReport r;
  for (const auto& u : users) (reg.contains(u) ? r.in_scope : r.over).insert(u);
  for (const auto& u : reg.members)
    if (!users.contains(u)) r.under.insert(u);

  std::map<UserId, std::size_t> accounts_per_user;
  for (const auto& [account, user] : rel.account_to_user())
    if (users.contains(user)) ++accounts_per_user[user];
  for (const auto& [user, n] : accounts_per_user)
    if (n >= 2) r.duplicate_users.emplace(user, n);
  return r;
}

}  // namespace smstat
