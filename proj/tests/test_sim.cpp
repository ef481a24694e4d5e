#include <doctest.h>

#include <string>
#include <vector>

#include "seabrew/sim.hpp"

using namespace seabrew;
using namespace seabrew::sim;

namespace {

// Small enough to keep the unit suite fast, large enough that every code
// path (epoch advance, both lift kinds, baseline accrual) runs many times.
WorkloadConfig tiny() {
  WorkloadConfig cfg;
  cfg.ciphertexts = 60;
  cfg.universe = 40;
  cfg.attrs = 2;
  cfg.daily_requests = 400;
  cfg.revocation_days = 2;
  cfg.horizon_days = 8;
  cfg.reps = 2;
  cfg.seed = 7;
  return cfg;
}

double mean_of(const MeterReport& r, std::string_view name) {
  const auto* row = r.find(name);
  REQUIRE(row != nullptr);
  return row->mean;
}

}  // namespace

TEST_CASE("workload validation rejects non-positive parameters") {
  CHECK(WorkloadConfig::desk_scale().validate().ok());
  const WorkloadConfig paper = WorkloadConfig::paper_scale();
  CHECK(paper.validate().ok());
  CHECK(paper.ciphertexts == 100'000);
  CHECK(paper.daily_requests == 50'000.0);
  CHECK(paper.revocation_days == 15.0);
  CHECK(paper.horizon_days == 365.0);
  CHECK(paper.reps == 100);

  WorkloadConfig cfg = tiny();
  cfg.ciphertexts = 0;
  CHECK(cfg.validate().code() == Errc::argument_error);
  cfg = tiny();
  cfg.attrs = cfg.universe + 1;
  CHECK(cfg.validate().code() == Errc::argument_error);
  cfg = tiny();
  cfg.daily_requests = 0;
  CHECK(cfg.validate().code() == Errc::argument_error);
  cfg = tiny();
  cfg.reps = 0;
  CHECK(cfg.validate().code() == Errc::argument_error);
  CHECK_FALSE(run_compute_experiment(cfg).ok());
}

TEST_CASE("the leave procedures cost 252 and 48 bytes on the radio at full scale") {
  const MeterReport r = run_traffic_experiment(50, 50, 20, Profile::eighty_bit);
  CHECK(mean_of(r, "seabrew.consumer_leave.broadcast_bytes") == 252);
  CHECK(mean_of(r, "seabrew.consumer_leave.unicast_count") == 0);
  CHECK(mean_of(r, "seabrew.consumer_leave.unicast_bytes") == 0);
  CHECK(mean_of(r, "seabrew.consumer_leave.total_bytes") == 252);
  CHECK(mean_of(r, "seabrew.producer_leave.broadcast_bytes") == 48);
  CHECK(mean_of(r, "seabrew.producer_leave.total_bytes") == 48);
  CHECK(mean_of(r, "bswku.consumer_leave.broadcast_bytes") == 256);
  CHECK(mean_of(r, "bswku.consumer_leave.unicast_count") == 50);
  CHECK(mean_of(r, "bswku.consumer_leave.unicast_bytes") == 50 * 2688);
  CHECK(mean_of(r, "bswku.consumer_leave.total_bytes") == 134'656);
  CHECK(mean_of(r, "bswku.producer_leave.total_bytes") == 48);

  bool disclosed = false;
  for (const auto& note : r.notes)
    if (note.find("analytical") != std::string::npos) disclosed = true;
  CHECK(disclosed);
}

TEST_CASE("lazy re-encryption work is flat in policy size; the baseline is not") {
  WorkloadConfig narrow = tiny();
  WorkloadConfig wide = tiny();
  wide.attrs = 8;

  auto rn = run_compute_experiment(narrow);
  auto rw = run_compute_experiment(wide);
  REQUIRE(rn.ok());
  REQUIRE(rw.ok());

  // identical arrival, epoch, and selection streams: the lazy scheme's counts
  // are exactly equal across attribute sizes
  CHECK(mean_of(rn.value(), "seabrew.g0_exps.total") ==
        mean_of(rw.value(), "seabrew.g0_exps.total"));
  CHECK(mean_of(rn.value(), "requests.arrived") == mean_of(rw.value(), "requests.arrived"));
  CHECK(mean_of(rn.value(), "revocation.epochs") == mean_of(rw.value(), "revocation.epochs"));
  CHECK(mean_of(rn.value(), "seabrew.g0_exps.total") > 0);

  // the per-attribute baseline grows superlinearly in the attribute count
  const double yw_narrow = mean_of(rn.value(), "ywrl.g0_exps.total");
  const double yw_wide = mean_of(rw.value(), "ywrl.g0_exps.total");
  CHECK(yw_narrow > 0);
  CHECK(yw_wide >= 2 * yw_narrow);
}

TEST_CASE("request load saturates the store: totals grow concavely with the rate") {
  std::vector<double> totals;
  for (double rate : {40.0, 80.0, 160.0}) {
    WorkloadConfig cfg = tiny();
    cfg.ciphertexts = 50;
    cfg.attrs = 5;
    cfg.horizon_days = 6;
    cfg.daily_requests = rate;
    auto r = run_compute_experiment(cfg);
    REQUIRE(r.ok());
    totals.push_back(mean_of(r.value(), "seabrew.g0_exps.total"));
  }
  CHECK(totals[0] < totals[1]);
  CHECK(totals[1] < totals[2]);
  CHECK(non_positive_second_differences(totals));

  CHECK(non_positive_second_differences(std::vector<double>{1, 2, 2.5}));
  CHECK_FALSE(non_positive_second_differences(std::vector<double>{1, 2, 4}));
  CHECK(non_positive_second_differences(std::vector<double>{5, 9}));  // too short to bend
}

TEST_CASE("reports are deterministic and conserve the meter") {
  const WorkloadConfig cfg = tiny();
  auto a = run_compute_experiment(cfg);
  auto b = run_compute_experiment(cfg);
  REQUIRE(a.ok());
  REQUIRE(b.ok());

  auto dsv_a = emit_report(a.value(), "dsv");
  auto dsv_b = emit_report(b.value(), "dsv");
  REQUIRE(dsv_a.ok());
  REQUIRE(dsv_b.ok());
  CHECK(dsv_a.value() == dsv_b.value());

  // the total row is exactly the sum of its procedure-tagged parts
  CHECK(mean_of(a.value(), "seabrew.g0_exps.total") ==
        mean_of(a.value(), "seabrew.g0_exps.update_cp") +
            mean_of(a.value(), "seabrew.g0_exps.update_dk"));
  CHECK(mean_of(a.value(), "ywrl.g0_exps.total") ==
        mean_of(a.value(), "ywrl.g0_exps.update_cp") +
            mean_of(a.value(), "ywrl.g0_exps.update_dk"));
  CHECK(mean_of(a.value(), "seabrew.pairings") == 0);

  const std::string text(dsv_a.value().begin(), dsv_a.value().end());
  CHECK(text.rfind("# workload:", 0) == 0);
  CHECK(text.find("name\tmean\tci95\tsamples\n") != std::string::npos);
  CHECK(text.find("ywrl baseline is an analytical operation count") != std::string::npos);
  CHECK(text.find("uniform over the store") != std::string::npos);

  auto table = emit_report(a.value(), "table");
  REQUIRE(table.ok());
  const std::string rendered(table.value().begin(), table.value().end());
  CHECK(rendered.find("seabrew.g0_exps.total") != std::string::npos);

  auto unknown = emit_report(a.value(), "json");
  REQUIRE_FALSE(unknown.ok());
  CHECK(unknown.code() == Errc::argument_error);
}

TEST_CASE("a compute report stays near its configured workload") {
  const WorkloadConfig cfg = tiny();
  auto r = run_compute_experiment(cfg);
  REQUIRE(r.ok());
  const double expected = cfg.daily_requests * cfg.horizon_days;
  const double arrived = mean_of(r.value(), "requests.arrived");
  CHECK(arrived > 0.5 * expected);
  CHECK(arrived < 1.5 * expected);
  CHECK(mean_of(r.value(), "revocation.epochs") >= 1);
  const auto* row = r.value().find("seabrew.g0_exps.total");
  REQUIRE(row != nullptr);
  CHECK(row->samples == cfg.reps);
  CHECK(row->ci95 >= 0);
  CHECK(r.value().find("no.such.row") == nullptr);
}
