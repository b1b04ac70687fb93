#include <random>

#include <gtest/gtest.h>

#include "evcc/policy.hpp"

namespace {

constexpr int F = evcc::TaskStatus::kFinished;

TEST(BetaAssign, LowestIndexOnTies) { EXPECT_EQ(evcc::beta_assign({0, 0, 0}), 0u); }

TEST(BetaAssign, UniqueArgminAmongUnfinished) { EXPECT_EQ(evcc::beta_assign({2, 1, F}), 1u); }

TEST(BetaAssign, NothingWhenAllFinished) { EXPECT_EQ(evcc::beta_assign({F, F}), std::nullopt); }

TEST(BetaAssign, SkipsFinishedTaskWithNoReplicas) { EXPECT_EQ(evcc::beta_assign({F, 4, 3}), 2u); }

TEST(RoundRobin, CyclesOverTasks) {
  EXPECT_EQ(evcc::round_robin_assign(0, 3), 0u);
  EXPECT_EQ(evcc::round_robin_assign(5, 3), 2u);
  EXPECT_EQ(evcc::round_robin_assign(7, 50), 7u);
  EXPECT_THROW(evcc::round_robin_assign(1, 0), std::invalid_argument);
}

TEST(RoundRobin, AssignsFinishedTasksToo) {
  const evcc::PolicyKind kind = evcc::RoundRobinPolicy{};
  evcc::EpisodePolicy p(kind);
  const evcc::TaskStatus s{F, 0};
  EXPECT_EQ(p.choose(s), 0u);
  EXPECT_EQ(p.choose(s), 1u);
  EXPECT_EQ(p.choose(s), 0u);
}

TEST(CheckBalance, Examples) {
  EXPECT_TRUE(evcc::check_balance({2, 2, 3}));
  EXPECT_FALSE(evcc::check_balance({1, 3}));
  EXPECT_TRUE(evcc::check_balance({F, 2, 2}));
  EXPECT_TRUE(evcc::check_balance({F, F}));
}

TEST(BalanceSnapshot, CountsOnlyUnfinished) {
  const auto snap = evcc::balance_snapshot({F, 2, 5});
  EXPECT_EQ(snap.gamma, 7);
  EXPECT_EQ(snap.unfinished, 2u);
}

// Random interleavings of BETA assignments and arbitrary completions keep the
// replica counts balanced right after every assignment.
TEST(BetaAssign, BalanceIsPreservedUnderArbitraryCompletions) {
  std::mt19937_64 rng(99);
  for (int trajectory = 0; trajectory < 10000; ++trajectory) {
    const std::size_t n = 1 + rng() % 8;
    evcc::TaskStatus s(n);
    const int steps = static_cast<int>(rng() % 60);
    for (int k = 0; k < steps && !s.all_finished(); ++k) {
      if (rng() % 4 == 0) {
        const auto i = static_cast<evcc::TaskIndex>(rng() % n);
        if (!s.finished(i)) s.mark_finished(i);
        continue;
      }
      const auto a = evcc::beta_assign(s);
      ASSERT_TRUE(a);
      s.add_replica(*a);
      ASSERT_TRUE(evcc::check_balance(s)) << s.to_string();
    }
  }
}

TEST(ParsePolicy, Names) {
  EXPECT_EQ(evcc::policy_name(evcc::parse_policy("beta")), "beta");
  EXPECT_EQ(evcc::policy_name(evcc::parse_policy("round-robin")), "round-robin");
  EXPECT_EQ(evcc::policy_name(evcc::parse_policy("mdp")), "mdp");
  EXPECT_THROW(evcc::parse_policy("greedy"), std::invalid_argument);
}

TEST(EpisodePolicy, MdpWithoutTableIsAnError) {
  const evcc::PolicyKind kind = evcc::MdpTablePolicy{};
  evcc::EpisodePolicy p(kind);
  EXPECT_THROW(p.choose(evcc::TaskStatus(2), 0), std::logic_error);
}

}  // namespace
