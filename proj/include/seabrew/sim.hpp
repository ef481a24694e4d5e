#pragma once
// Workload experiments over the protocol stack and the raw primitives.
//
// Two experiments, two baselines:
//
//   run_traffic_experiment — instantiates the real protocol stack, executes
//   one consumer leave and one producer leave, and reports the bytes each
//   procedure put on the low-bitrate radio. Alongside it reports an
//   analytical unicast baseline ("bswku"): a scheme with no broadcast key
//   update, which must re-issue every member's decryption key unicast by
//   unicast after a revocation. The baseline is byte arithmetic only; none
//   of its cryptography is executed.
//
//   run_compute_experiment — a discrete-event workload: objects live in a
//   store, download requests arrive as a Poisson process, revocation epochs
//   arrive as a second Poisson process. The server lifts stale objects (one
//   base-group exponentiation each, whatever the epoch gap) and stale
//   subscriber key anchors (same cost) lazily, on first touch. These
//   exponentiations are executed for real and counted by the global meter
//   under the labels "sim.update_cp" and "sim.update_dk". The comparison
//   baseline ("ywrl") models a scheme with per-attribute version numbers,
//   whose re-encryption cost per revocation event is the size of the
//   intersection between the object's attributes and the revoked key's
//   attributes; it is accrued analytically, never executed.
//
// Determinism: every random stream is derived from WorkloadConfig::seed with
// a fixed label, so a report is a pure function of its config. Request
// arrival times, revocation epochs, and object selection use labels that do
// not involve the attribute count, so sweeps over `attrs` see identical
// workloads. The compute experiment owns the global exponentiation meter
// while it runs and leaves it disabled.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seabrew/bytes.hpp"
#include "seabrew/result.hpp"

namespace seabrew::sim {

// The one deployed parameter profile: 80-bit symmetric security (512-bit
// base field, 160-bit group order, 40-byte signatures).
enum class Profile { eighty_bit };

struct WorkloadConfig {
  std::uint64_t ciphertexts = 1'000;  // objects in the store
  std::uint64_t universe = 200;       // attribute-universe size
  std::uint64_t attrs = 15;           // attributes per policy and per key
  double daily_requests = 5'000.0;    // Poisson mean arrivals per day
  double revocation_days = 5.0;       // mean days between revocation epochs
  double horizon_days = 30.0;
  std::uint64_t reps = 20;            // independent repetitions
  std::uint64_t seed = 1;

  // All counts and rates strictly positive, reps >= 1.
  Status validate() const;

  static WorkloadConfig desk_scale();   // the defaults above; minutes of compute
  static WorkloadConfig paper_scale();  // 100k objects, 50k/day, 15-day epochs,
                                        // one year, 100 reps; hours of compute
};

// A flat, named-row report. Each row is a statistic across repetitions:
// mean plus the half-width of its 95% confidence interval (Student t).
// Single-shot experiments have samples == 1 and ci95 == 0.
struct MeterReport {
  struct Row {
    std::string name;
    double mean = 0.0;
    double ci95 = 0.0;
    std::uint64_t samples = 1;
  };
  std::vector<Row> rows;           // stable order, documented in README
  std::vector<std::string> notes;  // model assumptions baked into the numbers

  const Row* find(std::string_view name) const;
};

// Full-scale radio-traffic measurement: builds a gateway network of
// `n_consumers` members (each keyed with `attrs_per_key` attributes) and
// `n_producers` devices, then executes the two leave procedures. Reported
// radio bytes count messages to the broadcast address or to member devices;
// backbone traffic between authority, cloud, and gateway is excluded.
MeterReport run_traffic_experiment(std::uint32_t n_consumers, std::uint32_t n_producers,
                                   std::size_t attrs_per_key, Profile profile);

// Desk- or paper-scale compute measurement as described above. Fails only on
// an invalid config.
Result<MeterReport> run_compute_experiment(const WorkloadConfig& cfg);

// Render a report: "dsv" (tab-separated, comment lines first) or "table"
// (aligned, human-readable). Unknown formats are refused. Output bytes are a
// pure function of the report.
Result<Bytes> emit_report(const MeterReport& report, std::string_view format);

// True iff every second difference of `means` is <= 0 (concavity check for
// load-sweep totals). Sequences shorter than 3 are trivially concave.
bool non_positive_second_differences(std::span<const double> means);

}  // namespace seabrew::sim
