#include <sstream>

#include <gtest/gtest.h>

#include "lmpsh/censoring.hpp"
#include "lmpsh/dataset.hpp"
#include "lmpsh/errors.hpp"
#include "test_data.hpp"

using namespace lmpsh;
using lmpsh::test::record;

namespace {

// Competing event at 1, censored at 2, event at 3, censored at 4.
SurvivalDataset toy() {
  return SurvivalDataset({record("1", 1.0, 1, 2, {0.0}), record("2", 2.0, 0, 0, {1.0}), record("3", 3.0, 1, 1, {0.0}),
                          record("4", 4.0, 0, 0, {1.0})},
                         {"z"});
}

}  // namespace

TEST(Dataset, ValidatesRecords) {
  EXPECT_THROW(SurvivalDataset({record("1", 0.0, 0, 0)}, {}), DataError);
  EXPECT_THROW(SurvivalDataset({record("1", 1.0, 1, 0)}, {}), DataError);
  EXPECT_THROW(SurvivalDataset({record("1", 1.0, 0, 2)}, {}), DataError);
  EXPECT_THROW(SurvivalDataset({record("1", 1.0, 0, 0), record("1", 2.0, 0, 0)}, {}), DataError);
  EXPECT_THROW(SurvivalDataset({record("1", 1.0, 0, 0, {1.0})}, {}), DataError);
}

TEST(Dataset, SortsIdsNaturally) {
  const SurvivalDataset ds({record("10", 1.0, 0, 0), record("9", 1.0, 0, 0), record("b", 1.0, 0, 0),
                            record("a", 1.0, 0, 0)},
                           {});
  EXPECT_EQ(ds[0].id, "9");
  EXPECT_EQ(ds[1].id, "10");
  EXPECT_EQ(ds[2].id, "a");
  EXPECT_EQ(ds[3].id, "b");
}

TEST(Dataset, CsvRoundTrip) {
  std::mt19937_64 g(3);
  const SurvivalDataset ds = test::random_competing(g, 30, 2, 2, 0.3);
  std::stringstream ss;
  write_csv(ss, ds);
  const SurvivalDataset back = read_csv(ss);
  ASSERT_EQ(back.size(), ds.size());
  EXPECT_EQ(back.covariate_names(), ds.covariate_names());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(back[i].id, ds[i].id);
    EXPECT_EQ(back[i].time, ds[i].time);
    EXPECT_EQ(back[i].cause, ds[i].cause);
    EXPECT_EQ(back[i].covariates, ds[i].covariates);
  }
}

TEST(Dataset, CsvErrors) {
  std::istringstream missing("id,time,status\n1,1,0\n");
  EXPECT_THROW(read_csv(missing), DataError);
  std::istringstream garbage("id,time,status,cause,z\n1,abc,0,0,1\n");
  EXPECT_THROW(read_csv(garbage), DataError);
  std::istringstream inconsistent("id,time,status,cause\n1,1,1,0\n");
  EXPECT_THROW(read_csv(inconsistent), DataError);
}

TEST(Dataset, LongFormatCovariates) {
  std::istringstream wide("id,time,status,cause,x\n1,3,1,1,0.5\n2,2,0,0,1\n");
  std::istringstream lng("id,tstart,tstop,v\n1,0,1,0\n1,1,3,1\n2,0,2,0\n");
  const SurvivalDataset ds = read_csv(wide, {}, &lng);
  ASSERT_EQ(ds.covariate_names(), (std::vector<std::string>{"x", "v"}));
  EXPECT_TRUE(ds[0].time_dependent());
  EXPECT_EQ(ds[0].covariates_at(0.5)[1], 0.0);
  EXPECT_EQ(ds[0].covariates_at(1.0)[1], 1.0);
  EXPECT_EQ(ds[0].change_times(0.0, 3.0), std::vector<double>{1.0});
  std::istringstream wide2("id,time,status,cause\n1,3,1,1\n");
  std::istringstream gap("id,tstart,tstop,v\n1,0,1,0\n1,1.5,3,1\n");
  EXPECT_THROW(read_csv(wide2, {}, &gap), DataError);
}

TEST(CensoringKM, ToyValues) {
  const StepFunction G = km_censoring(toy());
  EXPECT_EQ(G(1.9), 1.0);
  EXPECT_DOUBLE_EQ(G(2.0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(G(3.5), 2.0 / 3.0);
  EXPECT_EQ(G(4.0), 0.0);
}

TEST(CensoringKM, FailuresPrecedeCensoringAtTies) {
  const SurvivalDataset ds({record("1", 1.0, 1, 1), record("2", 1.0, 0, 0), record("3", 2.0, 0, 0)}, {});
  // The failure at 1 leaves first: one censoring among two at risk.
  EXPECT_DOUBLE_EQ(km_censoring(ds)(1.0), 0.5);
}

TEST(CountingProcess, ToyEncoding) {
  const SurvivalDataset ds = toy();
  const auto res = to_counting_process(ds, km_censoring(ds));
  const auto& cp = res.table;
  cp.validate();
  ASSERT_EQ(cp.rows(), 5u);
  // Competing subject: unit weight until the censoring jump at 2, then G(2)/G(1-) = 2/3 up to tau = 4.
  EXPECT_EQ(cp.start[0], 0.0);
  EXPECT_EQ(cp.stop[0], 2.0);
  EXPECT_EQ(cp.weight[0], 1.0);
  EXPECT_EQ(cp.start[1], 2.0);
  EXPECT_EQ(cp.stop[1], 4.0);
  EXPECT_DOUBLE_EQ(cp.weight[1], 2.0 / 3.0);
  EXPECT_EQ(cp.status[1], 0);
  EXPECT_EQ(cp.stop[2], 2.0);
  EXPECT_EQ(cp.stop[3], 3.0);
  EXPECT_EQ(cp.status[3], 1);
  EXPECT_EQ(cp.stop[4], 4.0);
  EXPECT_EQ(cp.num_events(), 1u);
  EXPECT_EQ(cp.cluster[0], cp.cluster[1]);
}

TEST(CountingProcess, CompetingAsCensoringCutsAtFailure) {
  const SurvivalDataset ds = toy();
  CountingProcessOptions o;
  o.competing_as_censoring = true;
  const auto cp = to_counting_process(ds, km_censoring(ds), o).table;
  EXPECT_EQ(cp.rows(), 4u);
  EXPECT_EQ(cp.stop[0], 1.0);
}

TEST(CountingProcess, DelayedEntryRequiresRiskAfterEntry) {
  const SurvivalDataset ds = toy();
  CountingProcessOptions o;
  o.entry = 1.5;
  EXPECT_THROW(to_counting_process(ds, km_censoring(ds), o), DataError);
}

TEST(CountingProcess, CsvRoundTrip) {
  std::mt19937_64 g(5);
  const SurvivalDataset ds = test::random_competing(g, 40, 2, 2, 0.3);
  const auto cp = to_counting_process(ds, km_censoring(ds)).table;
  std::stringstream ss;
  write_counting_process_csv(ss, cp);
  const auto back = read_counting_process_csv(ss);
  EXPECT_EQ(back.rows(), cp.rows());
  EXPECT_EQ(back.weight, cp.weight);
  EXPECT_EQ(back.z, cp.z);
}

// Property: weights lie in (0, 1], intervals are ordered per subject, every subject
// has exactly one event-of-interest row at most.
TEST(CountingProcess, PropertiesOnRandomData) {
  std::mt19937_64 g(11);
  for (int rep = 0; rep < 200; ++rep) {
    const SurvivalDataset ds = test::random_competing(g, 5 + rep % 40, 1, 3, 0.35, rep % 2 == 0);
    const auto cp = to_counting_process(ds, km_censoring(ds)).table;
    EXPECT_NO_THROW(cp.validate());
    std::vector<int> events(ds.size(), 0);
    for (std::size_t r = 0; r < cp.rows(); ++r) {
      EXPECT_GT(cp.weight[r], 0.0);
      EXPECT_LE(cp.weight[r], 1.0);
      events[cp.cluster[r]] += cp.status[r];
    }
    for (std::size_t i = 0; i < ds.size(); ++i) {
      EXPECT_EQ(events[i], ds[i].status == 1 && ds[i].cause == 1 ? 1 : 0);
    }
  }
}
