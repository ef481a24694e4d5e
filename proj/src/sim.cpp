#include "seabrew/sim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "seabrew/abe.hpp"
#include "seabrew/algebra.hpp"
#include "seabrew/crypto.hpp"
#include "seabrew/policy.hpp"
#include "seabrew/protocol.hpp"

namespace seabrew::sim {
namespace {

// Remote subscriber pool served by the compute experiment. The workload
// config deliberately has no knob for it: subscriber key lifts cost one
// exponentiation each regardless of attribute count, so the pool size only
// shifts a small additive term shared by every grid point.
constexpr std::size_t kSubscribers = 50;

// ---------------------------------------------------------------------------
// sampling helpers (all draws go through the deterministic counter DRBG)

std::uint64_t draw_u64(algebra::Rng& rng) {
  std::uint8_t buf[8];
  rng.fill(buf);
  std::uint64_t x = 0;
  for (int i = 7; i >= 0; --i) x = x << 8 | buf[i];
  return x;
}

// Uniform in (0, 1): 53 mantissa bits, offset by half an ulp so 0 is excluded.
double draw_unit(algebra::Rng& rng) {
  return (static_cast<double>(draw_u64(rng) >> 11) + 0.5) * 0x1p-53;
}

// Exponential inter-arrival with the given mean (inverse CDF).
double draw_gap(algebra::Rng& rng, double mean) { return -mean * std::log(draw_unit(rng)); }

std::uint64_t draw_below(algebra::Rng& rng, std::uint64_t n) { return draw_u64(rng) % n; }

// k distinct attribute ids out of [0, universe), sorted.
std::vector<std::uint16_t> draw_subset(algebra::Rng& rng, std::uint64_t universe,
                                       std::uint64_t k) {
  std::vector<std::uint16_t> out;
  out.reserve(k);
  while (out.size() < k) {
    auto id = static_cast<std::uint16_t>(draw_below(rng, universe));
    if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t intersection_size(const std::vector<std::uint16_t>& a,
                              const std::vector<std::uint16_t>& b) {
  std::size_t n = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib)
      ++ia;
    else if (*ib < *ia)
      ++ib;
    else
      ++n, ++ia, ++ib;
  }
  return n;
}

// ---------------------------------------------------------------------------
// statistics

// Two-sided 97.5% Student-t quantiles for 1..30 degrees of freedom, then the
// normal limit.
constexpr double kT975[30] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                              2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
                              2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
                              2.060,  2.056, 2.052, 2.048, 2.045, 2.042};

MeterReport::Row stat_row(std::string name, const std::vector<double>& samples) {
  MeterReport::Row row;
  row.name = std::move(name);
  row.samples = samples.size();
  if (samples.empty()) return row;
  double sum = 0;
  for (double s : samples) sum += s;
  row.mean = sum / static_cast<double>(samples.size());
  if (samples.size() > 1) {
    double ss = 0;
    for (double s : samples) ss += (s - row.mean) * (s - row.mean);
    const double var = ss / static_cast<double>(samples.size() - 1);
    const std::size_t df = samples.size() - 1;
    const double t = df <= 30 ? kT975[df - 1] : 1.960;
    row.ci95 = t * std::sqrt(var / static_cast<double>(samples.size()));
  }
  return row;
}

MeterReport::Row const_row(std::string name, double value) {
  return MeterReport::Row{std::move(name), value, 0.0, 1};
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// config

Status WorkloadConfig::validate() const {
  auto bad = [](const char* what) {
    return Status(Error{Errc::argument_error, std::string("workload: ") + what});
  };
  if (ciphertexts == 0) return bad("ciphertext count must be positive");
  if (universe == 0) return bad("attribute universe must be positive");
  if (attrs == 0) return bad("attributes per policy must be positive");
  if (attrs > universe) return bad("attributes per policy exceed the universe");
  if (!(daily_requests > 0)) return bad("daily request mean must be positive");
  if (!(revocation_days > 0)) return bad("revocation inter-arrival mean must be positive");
  if (!(horizon_days > 0)) return bad("horizon must be positive");
  if (reps == 0) return bad("repetitions must be at least 1");
  return Status();
}

WorkloadConfig WorkloadConfig::desk_scale() { return WorkloadConfig{}; }

WorkloadConfig WorkloadConfig::paper_scale() {
  WorkloadConfig cfg;
  cfg.ciphertexts = 100'000;
  cfg.universe = 200;
  cfg.attrs = 15;
  cfg.daily_requests = 50'000.0;
  cfg.revocation_days = 15.0;
  cfg.horizon_days = 365.0;
  cfg.reps = 100;
  return cfg;
}

const MeterReport::Row* MeterReport::find(std::string_view name) const {
  for (const auto& row : rows)
    if (row.name == name) return &row;
  return nullptr;
}

// ---------------------------------------------------------------------------
// traffic experiment

MeterReport run_traffic_experiment(std::uint32_t n_consumers, std::uint32_t n_producers,
                                   std::size_t attrs_per_key, Profile profile) {
  switch (profile) {
    case Profile::eighty_bit:
      break;
  }
  assert(n_consumers > 0 && n_producers > 0 && attrs_per_key > 0);

  protocol::System s;
  algebra::CounterRng rng(0xb1e55ed);
  {
    auto st = protocol::system_init(s, n_consumers, rng);
    assert(st.ok());
    (void)st;
  }

  std::vector<std::string> attrs;
  for (std::size_t i = 0; i < attrs_per_key; ++i) attrs.push_back("a" + std::to_string(i));

  std::vector<protocol::Id> producers, consumers;
  for (std::uint32_t i = 0; i < n_producers; ++i) {
    auto p = protocol::producer_join(s, /*is_wsan=*/true, rng);
    assert(p.ok());
    producers.push_back(p.value());
  }
  for (std::uint32_t i = 0; i < n_consumers; ++i) {
    auto c = protocol::consumer_join(s, attrs, /*is_wsan=*/true, rng);
    assert(c.ok());
    consumers.push_back(c.value());
  }

  // Radio traffic = messages to the broadcast address or to member devices.
  const auto& trace = s.bus.trace();
  auto is_member = [&](protocol::Id id) {
    return std::find(consumers.begin(), consumers.end(), id) != consumers.end() ||
           std::find(producers.begin(), producers.end(), id) != producers.end();
  };
  struct RadioBytes {
    double broadcast = 0, unicast = 0, unicast_count = 0;
  };
  auto measure_from = [&](std::size_t mark) {
    RadioBytes out;
    for (std::size_t i = mark; i < trace.size(); ++i) {
      if (trace[i].receiver == protocol::kBroadcastId)
        out.broadcast += static_cast<double>(trace[i].bytes);
      else if (is_member(trace[i].receiver)) {
        out.unicast += static_cast<double>(trace[i].bytes);
        out.unicast_count += 1;
      }
    }
    return out;
  };

  std::size_t mark = trace.size();
  {
    const std::vector<protocol::Id> leaving{consumers.back()};
    auto st = protocol::consumer_leave(s, leaving, rng);
    assert(st.ok());
    (void)st;
  }
  const RadioBytes cl = measure_from(mark);

  mark = trace.size();
  {
    const std::vector<protocol::Id> leaving{producers.back()};
    auto st = protocol::producer_leave(s, leaving);
    assert(st.ok());
    (void)st;
  }
  const RadioBytes pl = measure_from(mark);

  // Unicast-rekey baseline, byte arithmetic only: after a revocation the
  // authority broadcasts fresh public key material and re-issues every
  // member's decryption key over unicast. Layouts use the same profile:
  // 40-byte signatures, 64-byte compressed base-group elements, 128-byte
  // target-group elements, 24 bytes of metadata (recipient id, version,
  // framing) per message.
  const double kSig = crypto::kSignatureBytes;
  const double kG0 = algebra::kG0Bytes;
  const double kG1 = 2.0 * algebra::kG0Bytes;
  const double kMeta = 24.0;
  const double base_broadcast = kSig + kG0 + kG1 + kMeta;
  const double base_unicast = kSig + (2.0 * static_cast<double>(attrs_per_key) + 1.0) * kG0 + kMeta;
  const double base_unicasts = n_consumers;

  MeterReport report;
  report.rows = {
      const_row("seabrew.consumer_leave.broadcast_bytes", cl.broadcast),
      const_row("seabrew.consumer_leave.unicast_count", cl.unicast_count),
      const_row("seabrew.consumer_leave.unicast_bytes", cl.unicast),
      const_row("seabrew.consumer_leave.total_bytes", cl.broadcast + cl.unicast),
      const_row("seabrew.producer_leave.broadcast_bytes", pl.broadcast),
      const_row("seabrew.producer_leave.unicast_count", pl.unicast_count),
      const_row("seabrew.producer_leave.unicast_bytes", pl.unicast),
      const_row("seabrew.producer_leave.total_bytes", pl.broadcast + pl.unicast),
      const_row("bswku.consumer_leave.broadcast_bytes", base_broadcast),
      const_row("bswku.consumer_leave.unicast_count", base_unicasts),
      const_row("bswku.consumer_leave.unicast_bytes", base_unicasts * base_unicast),
      const_row("bswku.consumer_leave.total_bytes",
                base_broadcast + base_unicasts * base_unicast),
      const_row("bswku.producer_leave.broadcast_bytes", pl.broadcast),
      const_row("bswku.producer_leave.unicast_count", 0),
      const_row("bswku.producer_leave.unicast_bytes", 0),
      const_row("bswku.producer_leave.total_bytes", pl.broadcast),
  };
  report.notes = {
      "network: consumers=" + std::to_string(n_consumers) +
          " producers=" + std::to_string(n_producers) +
          " attrs_per_key=" + std::to_string(attrs_per_key) + " profile=80bit",
      "radio accounting: messages to the broadcast address or to member devices; "
      "backbone links between authority, cloud, and gateway are excluded",
      "bswku baseline is analytical byte arithmetic; its cryptography is never executed",
      "bswku unicast layout: 40 B signature + (2*attrs+1) compressed 64 B group "
      "elements + 24 B metadata",
      "bswku broadcast layout: 40 B signature + 64 B + 128 B fresh key material + "
      "24 B metadata",
      "producer removal is identical in both schemes: one signed broadcast naming "
      "the removed device",
  };
  return report;
}

// ---------------------------------------------------------------------------
// compute experiment

namespace {

struct RepCounts {
  double requests = 0, epochs = 0;
  double sb_cp = 0, sb_dk = 0;
  double yw_cp = 0, yw_dk = 0;
};

RepCounts run_rep(const WorkloadConfig& cfg, std::uint64_t rep) {
  const std::string tag = std::to_string(rep);
  const std::string attr_tag = tag + "/" + std::to_string(cfg.attrs);
  algebra::CounterRng root(cfg.seed);
  // Arrival, epoch, and selection streams deliberately omit the attribute
  // count from their labels: sweeps over `attrs` replay the same workload.
  algebra::CounterRng rev_rng(root, "revocations/" + tag);
  algebra::CounterRng req_rng(root, "requests/" + tag);
  algebra::CounterRng sel_rng(root, "selection/" + tag);
  algebra::CounterRng attr_rng(root, "attributes/" + attr_tag);
  algebra::CounterRng crypto_rng(root, "crypto/" + attr_tag);

  // Revocation epochs over the horizon.
  std::vector<double> epoch_times;
  for (double t = draw_gap(rev_rng, cfg.revocation_days); t < cfg.horizon_days;
       t += draw_gap(rev_rng, cfg.revocation_days))
    epoch_times.push_back(t);

  // Real key material: one template object, lifted copies in the store.
  auto [mk, ek] = abe::setup(crypto_rng);
  std::string policy_text;
  for (std::uint64_t i = 0; i < cfg.attrs; ++i) {
    if (i) policy_text += " and ";
    policy_text += "a" + std::to_string(i);
  }
  auto pol = policy::Policy::parse(policy_text);
  assert(pol.ok());
  const abe::Ciphertext tpl = abe::encrypt(algebra::random_g1(crypto_rng), pol.value(), ek,
                                           crypto_rng);

  struct ObjectSlot {
    algebra::G0 c;
    std::uint64_t version = 0;
    std::uint32_t yw_epoch = 0;
    std::vector<std::uint16_t> attrs;
  };
  std::vector<ObjectSlot> store(cfg.ciphertexts);
  for (auto& obj : store) {
    obj.c = tpl.c;
    obj.attrs = draw_subset(attr_rng, cfg.universe, cfg.attrs);
  }

  struct Subscriber {
    algebra::G0 d;
    std::uint64_t version = 0;
    std::uint32_t yw_epoch = 0;
    std::vector<std::uint16_t> attrs;
  };
  std::vector<Subscriber> subs(kSubscribers);
  for (std::size_t i = 0; i < subs.size(); ++i) {
    subs[i].d = algebra::hash_to_g0("subscriber-" + std::to_string(i));
    subs[i].attrs = draw_subset(attr_rng, cfg.universe, cfg.attrs);
  }

  // Epoch state, advanced lazily as request time passes each revocation.
  std::vector<abe::VersionedScalar> cp_steps, dk_steps;
  std::vector<std::vector<std::uint16_t>> revoked_attrs;
  std::size_t next_epoch = 0;
  std::uint64_t version = 0;
  auto advance_epochs = [&](double now) {
    while (next_epoch < epoch_times.size() && epoch_times[next_epoch] <= now) {
      auto [mk2, uk] = abe::update_mk(mk, crypto_rng);
      mk = std::move(mk2);
      cp_steps.push_back({uk.version, uk.u_cp});
      dk_steps.push_back({uk.version, uk.u_dk});
      revoked_attrs.push_back(draw_subset(attr_rng, cfg.universe, cfg.attrs));
      version = uk.version;
      ++next_epoch;
    }
  };

  algebra::Meter::set_enabled(true);
  algebra::Meter::reset();

  RepCounts counts;
  counts.epochs = static_cast<double>(epoch_times.size());
  for (double t = draw_gap(req_rng, 1.0 / cfg.daily_requests); t < cfg.horizon_days;
       t += draw_gap(req_rng, 1.0 / cfg.daily_requests)) {
    advance_epochs(t);
    ObjectSlot& obj = store[draw_below(sel_rng, cfg.ciphertexts)];
    Subscriber& sub = subs[draw_below(sel_rng, subs.size())];
    counts.requests += 1;

    if (obj.version < version) {
      abe::Ciphertext view = tpl;
      view.c = obj.c;
      view.version = obj.version;
      algebra::Meter::Scope scope("sim.update_cp");
      auto lifted = abe::update_cp(
          view, std::span<const abe::VersionedScalar>(cp_steps)
                    .subspan(obj.version, version - obj.version));
      assert(lifted.ok());
      obj.c = lifted.value().c;
      obj.version = version;
    }
    if (sub.version < version) {
      abe::DecryptionKey view;
      view.d = sub.d;
      view.version = sub.version;
      algebra::Meter::Scope scope("sim.update_dk");
      auto lifted = abe::update_dk(
          view, std::span<const abe::VersionedScalar>(dk_steps)
                    .subspan(sub.version, version - sub.version));
      assert(lifted.ok());
      sub.d = lifted.value().d;
      sub.version = version;
    }

    // Baseline accrual: one re-keying per shared attribute per missed epoch.
    for (std::size_t e = obj.yw_epoch; e < next_epoch; ++e)
      counts.yw_cp += static_cast<double>(intersection_size(obj.attrs, revoked_attrs[e]));
    obj.yw_epoch = static_cast<std::uint32_t>(next_epoch);
    for (std::size_t e = sub.yw_epoch; e < next_epoch; ++e)
      counts.yw_dk += static_cast<double>(intersection_size(sub.attrs, revoked_attrs[e]));
    sub.yw_epoch = static_cast<std::uint32_t>(next_epoch);
  }

  counts.sb_cp = static_cast<double>(algebra::Meter::labeled("sim.update_cp").g0_exps);
  counts.sb_dk = static_cast<double>(algebra::Meter::labeled("sim.update_dk").g0_exps);
  assert(algebra::Meter::labeled("sim.update_cp").pairings == 0);
  assert(algebra::Meter::labeled("sim.update_dk").pairings == 0);
  algebra::Meter::reset();
  algebra::Meter::set_enabled(false);
  return counts;
}

}  // namespace

Result<MeterReport> run_compute_experiment(const WorkloadConfig& cfg) {
  if (auto st = cfg.validate(); !st.ok()) return st.error();

  std::vector<double> requests, epochs, sb_cp, sb_dk, sb_total, yw_cp, yw_dk, yw_total;
  for (std::uint64_t rep = 0; rep < cfg.reps; ++rep) {
    const RepCounts c = run_rep(cfg, rep);
    requests.push_back(c.requests);
    epochs.push_back(c.epochs);
    sb_cp.push_back(c.sb_cp);
    sb_dk.push_back(c.sb_dk);
    sb_total.push_back(c.sb_cp + c.sb_dk);
    yw_cp.push_back(c.yw_cp);
    yw_dk.push_back(c.yw_dk);
    yw_total.push_back(c.yw_cp + c.yw_dk);
  }

  MeterReport report;
  report.rows = {
      stat_row("seabrew.g0_exps.update_cp", sb_cp),
      stat_row("seabrew.g0_exps.update_dk", sb_dk),
      stat_row("seabrew.g0_exps.total", sb_total),
      const_row("seabrew.pairings", 0),
      stat_row("ywrl.g0_exps.update_cp", yw_cp),
      stat_row("ywrl.g0_exps.update_dk", yw_dk),
      stat_row("ywrl.g0_exps.total", yw_total),
      stat_row("requests.arrived", requests),
      stat_row("revocation.epochs", epochs),
  };
  report.notes = {
      "workload: ciphertexts=" + std::to_string(cfg.ciphertexts) +
          " universe=" + std::to_string(cfg.universe) + " attrs=" + std::to_string(cfg.attrs) +
          " daily_requests=" + fmt("%.6g", cfg.daily_requests) +
          " revocation_days=" + fmt("%.6g", cfg.revocation_days) +
          " horizon_days=" + fmt("%.6g", cfg.horizon_days) + " reps=" + std::to_string(cfg.reps) +
          " seed=" + std::to_string(cfg.seed),
      "object selection per request: uniform over the store",
      "subscriber pool: " + std::to_string(kSubscribers) +
          " remote members, requests attributed uniformly",
      "server-side work only: lazy object lifts and subscriber key-anchor lifts, "
      "executed for real and metered",
      "ywrl baseline is an analytical operation count (per-attribute re-keying); "
      "its cryptography is never executed",
      "confidence intervals: Student t, 95%",
  };
  return report;
}

// ---------------------------------------------------------------------------
// rendering

Result<Bytes> emit_report(const MeterReport& report, std::string_view format) {
  std::string out;
  if (format == "dsv") {
    for (const auto& note : report.notes) out += "# " + note + "\n";
    out += "name\tmean\tci95\tsamples\n";
    for (const auto& row : report.rows)
      out += row.name + "\t" + fmt("%.4f", row.mean) + "\t" + fmt("%.4f", row.ci95) + "\t" +
             std::to_string(row.samples) + "\n";
  } else if (format == "table") {
    std::size_t width = 4;
    for (const auto& row : report.rows) width = std::max(width, row.name.size());
    out += std::string("name") + std::string(width - 4, ' ') + "  " + "mean            " +
           "ci95          " + "samples\n";
    for (const auto& row : report.rows) {
      std::string mean = fmt("%.4f", row.mean), ci = fmt("%.4f", row.ci95);
      out += row.name + std::string(width - row.name.size(), ' ') + "  " + mean +
             std::string(mean.size() < 16 ? 16 - mean.size() : 1, ' ') + ci +
             std::string(ci.size() < 14 ? 14 - ci.size() : 1, ' ') +
             std::to_string(row.samples) + "\n";
    }
    for (const auto& note : report.notes) out += "  - " + note + "\n";
  } else {
    return Error{Errc::argument_error,
                 "unknown report format \"" + std::string(format) + "\" (use dsv or table)"};
  }
  return Bytes(out.begin(), out.end());
}

bool non_positive_second_differences(std::span<const double> means) {
  for (std::size_t i = 0; i + 2 < means.size(); ++i)
    if ((means[i + 2] - means[i + 1]) - (means[i + 1] - means[i]) > 0.0) return false;
  return true;
}

}  // namespace seabrew::sim
