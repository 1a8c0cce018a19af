#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>
#include <sstream>
#include <vector>

#include "cidc/engine.hpp"
#include "cidc/trace_io.hpp"
#include "cidc/view.hpp"
#include "doctest.h"

using namespace cidc;

namespace {

/// m = 3, busy slot of 4 mini-slots, 10000 mini-slots per cycle.
ProtocolParams golden_params() {
  ProtocolParams p;
  p.lambda = 10.0;
  p.n_vehicles = 5;
  p.m_param = 3;
  p.t_slot = 10e-6;
  p.t_tx = 20e-6;
  p.t_difs = 20e-6;
  p.k_busy = 4;
  return p;
}

}  // namespace

TEST_CASE("initial counter from the intensity estimate") {
  CHECK(entry_point(0, 2) == 2);
  CHECK(entry_point(2, 3) == 9);
  CHECK(entry_point(5, 1) == 6);
}

TEST_CASE("estimate counts contending known neighbors") {
  VehicleView view(0, 6);
  for (int v = 1; v < 6; ++v) view.learn(v, 100 * v);
  CHECK(view.known_count() == 5);
  CHECK(view.estimate() == 0);

  // each generation raises the count by one
  for (int v = 1; v < 6; ++v) view.on_generated(v);
  CHECK(view.estimate() == 5);

  // five generated, two heard -> three
  view.on_delivered(1, 100);
  view.on_delivered(3, 300);
  CHECK(view.estimate() == 3);
  CHECK_FALSE(view.contending(1));
  CHECK(view.contending(2));

  // a message lost to a collision stops contending without being heard
  view.on_destroyed(2);
  CHECK(view.estimate() == 2);

  // replacement of an unserved message keeps its vehicle counted once
  view.on_generated(4);
  CHECK(view.estimate() == 2);

  // the estimating vehicle's own packet never counts
  view.on_generated(0);
  CHECK(view.estimate() == 2);

  // unknown neighbors contend invisibly until a delivery re-teaches the
  // offset, which also makes the still-outstanding message visible again
  view.forget(4);
  CHECK(view.known_count() == 4);
  CHECK(view.estimate() == 1);
  view.on_delivered(4, 400);
  CHECK(view.knows(4));
  CHECK(view.estimate() == 1);
  view.on_generated(4);
  CHECK(view.estimate() == 2);

  // re-learning while the hidden message is still outstanding re-counts it
  view.forget(5);
  CHECK(view.estimate() == 1);
  view.learn(5, 500);
  CHECK(view.estimate() == 2);
}

TEST_CASE("churn size and injection") {
  CHECK(churn_count(0.0, 101) == 0);
  CHECK(churn_count(1.0, 101) == 1);
  CHECK(churn_count(3.0, 101) == 3);
  CHECK(churn_count(25.0, 5) == 1);
  CHECK(churn_count(100.0, 5) == 4);

  std::vector<VehicleView> views;
  for (int v = 0; v < 5; ++v) {
    views.emplace_back(v, 5);
    for (int u = 0; u < 5; ++u)
      if (u != v) views[v].learn(u, 10 * u);
  }
  std::mt19937_64 rng(3);
  inject_churn(views, 25.0, rng);
  for (const VehicleView& view : views) CHECK(view.known_count() == 3);
  inject_churn(views, 0.0, rng);
  for (const VehicleView& view : views) CHECK(view.known_count() == 3);

  // boundary re-establishment: churned entries come back, entries the
  // table never held stay unknown
  std::vector<VehicleView> fresh;
  for (int v = 0; v < 5; ++v) fresh.emplace_back(v, 5);
  std::vector<std::int64_t> offsets = {0, 10, 20, -1, 40};
  fresh[0].learn(1, 10);
  fresh[0].forget(1);
  relearn_offsets(fresh, offsets);
  CHECK(fresh[0].knows(1));
  CHECK(fresh[0].knows(2));
  CHECK(fresh[0].knows(4));
  CHECK_FALSE(fresh[0].knows(3));
  CHECK_FALSE(fresh[0].knows(0));
  CHECK(fresh[0].known_count() == 3);
  CHECK(fresh[3].known_count() == 4);
}

TEST_CASE("worked five-vehicle round") {
  const ProtocolParams p = golden_params();
  RoundOptions opt;
  opt.keep_packets = true;
  opt.record_trace = true;
  opt.warmup_cycles = 0;
  const std::vector<Arrival> arrivals = {{2, 2}, {9, 3}, {10, 4}};

  SlotEngine eng(p, Protocol::cidc, arrivals, 40, 1, opt);
  eng.seed_contender(0, 0);
  eng.seed_contender(1, 2);

  // (i) the seeded transmission occupies [0, 4); the mid-slot arrival sees
  // both seeded messages
  CHECK(eng.contending() == 2);
  CHECK(eng.b_max() == 2);
  REQUIRE(eng.step());
  CHECK(eng.slot() == 1);
  CHECK(eng.slot_start_mini() == 4);
  CHECK(eng.contending() == 2);
  CHECK(eng.counter_of(0) == -1);
  CHECK(eng.counter_of(1) == 1);
  CHECK(eng.counter_of(2) == 8);

  // (ii) second seed reaches zero and transmits in [5, 9)
  REQUIRE(eng.step());
  CHECK(eng.slot() == 2);
  CHECK(eng.slot_start_mini() == 5);
  CHECK(eng.counter_of(1) == 0);
  CHECK(eng.counter_of(2) == 7);
  CHECK(eng.b_max() == 7);

  // (iii) boundary arrival lands at slot 3 with one message still unheard
  REQUIRE(eng.step());
  CHECK(eng.slot() == 3);
  CHECK(eng.slot_start_mini() == 9);
  CHECK(eng.contending() == 1);
  CHECK(eng.counter_of(2) == 6);

  eng.run();
  RoundResult r = eng.take_result();

  REQUIRE(r.packets.size() == 5);
  CHECK(r.packets[0].vehicle == 0);
  CHECK(r.packets[0].entry == 0);
  CHECK(r.packets[0].outcome == Outcome::sent);
  CHECK(r.packets[1].entry == 2);
  CHECK(r.packets[1].outcome == Outcome::sent);
  CHECK(r.packets[1].d_o == doctest::Approx(9e-5).epsilon(1e-12));

  // entries from the exact estimates: 3*(2+1), 3*(1+1), 3*(2+1)
  CHECK(r.packets[2].entry == 9);
  CHECK(r.packets[3].entry == 6);
  CHECK(r.packets[4].entry == 9);

  // the two mid-stream arrivals land 3 slots apart and collide 6 slots
  // after the second one entered
  CHECK(r.packets[2].outcome == Outcome::collided);
  CHECK(r.packets[3].outcome == Outcome::collided);
  CHECK(r.packets[2].start_tx == 15);
  CHECK(r.packets[3].start_tx == 15);
  CHECK(r.packets[2].partners == 1);
  CHECK(r.packets[2].d_o == doctest::Approx(1.7e-4).epsilon(1e-12));
  CHECK(r.packets[2].d_c == doctest::Approx(1.5e-4).epsilon(1e-12));
  CHECK(r.packets[3].d_o == doctest::Approx(1.0e-4).epsilon(1e-12));

  CHECK(r.packets[4].outcome == Outcome::sent);
  CHECK(r.packets[4].start_tx == 22);
  CHECK(r.packets[4].d_o == doctest::Approx(1.6e-4).epsilon(1e-12));
  CHECK(r.packets[4].d_c == doctest::Approx(1.4e-4).epsilon(1e-12));

  CHECK(r.stats.generated == 5);
  CHECK(r.stats.sent == 3);
  CHECK(r.stats.collided == 2);
  CHECK(r.stats.expired == 0);
  CHECK(r.stats.collision_slots == 1);
  CHECK(r.stats.collision_pairs == 1);
  CHECK(r.stats.same_slot_pairs == 0);
  CHECK(r.stats.ratio_violations == 0);
  CHECK(r.stats.ratio_max <= 1.0 / 3.0 + 1e-12);
  CHECK(r.stats.bookkeeping_defects == 0);

  REQUIRE(r.stats.alignment_checks == 1);
  CHECK(r.stats.alignment_violations == 0);
  REQUIRE(r.stats.alignment_samples.size() == 1);
  const AlignmentCase& cs = r.stats.alignment_samples[0];
  CHECK(cs.vehicle1 == 2);
  CHECK(cs.vehicle2 == 3);
  CHECK(cs.slot1 == 0);
  CHECK(cs.slot2 == 3);
  CHECK(cs.alpha == 3);
  CHECK(cs.tau == 2);
  CHECK(cs.eta == 1);
  CHECK(cs.ok);

  // slot rows: two singleton transmissions, the collision, the late send
  REQUIRE(r.trace.size() == 28);
  auto row = [&](std::int64_t slot) { return r.trace[static_cast<std::size_t>(slot)]; };
  CHECK(row(0).h == 1);
  CHECK(row(0).n_o == 1);
  CHECK(row(0).c == 2);
  CHECK(row(0).b_max == 2);
  CHECK(row(1).h == 0);
  CHECK(row(1).c == 2);
  CHECK(row(1).b_max == 8);
  CHECK(row(2).h == 1);
  CHECK(row(2).n_o == 1);
  CHECK(row(3).c == 1);
  CHECK(row(3).b_max == 6);
  CHECK(row(5).c == 3);
  CHECK(row(5).b_max == 8);
  CHECK(row(9).h == 1);
  CHECK(row(9).n_o == 2);
  CHECK(row(9).c == 3);
  CHECK(row(9).b_max == 4);
  CHECK(row(13).h == 1);
  CHECK(row(13).n_o == 1);
  CHECK(row(13).c == 1);
  CHECK(row(13).b_max == 0);
  for (std::size_t i = 14; i < r.trace.size(); ++i) {
    CHECK(r.trace[i].h == 0);
    CHECK(r.trace[i].c == 0);
  }
}

TEST_CASE("ratio uses the virtual entry of a hypothetical next arrival") {
  ProtocolParams p = golden_params();
  p.n_vehicles = 2;
  RoundOptions opt;
  opt.warmup_cycles = 0;
  SlotEngine eng(p, Protocol::cidc, std::vector<Arrival>{}, 4, 1, opt);
  eng.seed_contender(0, 5);
  eng.seed_contender(1, 8);
  eng.run();
  const RoundResult r = eng.take_result();
  // four idle slots, each with 2 contenders over max(b_max, 3 * (2 + 1))
  CHECK(r.stats.upsilon_minis == 4);
  CHECK(r.stats.upsilon_avg() == doctest::Approx(2.0 / 9.0).epsilon(1e-12));
  CHECK(r.stats.ratio_violations == 0);
  // both packets were still waiting at the horizon
  CHECK(r.stats.expired == 2);
  CHECK(r.stats.generated == 2);
}

TEST_CASE("a fresh arrival replaces the unserved predecessor") {
  ProtocolParams p = golden_params();
  p.n_vehicles = 2;
  RoundOptions opt;
  opt.keep_packets = true;
  opt.warmup_cycles = 0;
  SlotEngine eng(p, Protocol::cidc, std::vector<Arrival>{{10, 0}}, 100, 1, opt);
  eng.seed_contender(0, 50);
  eng.run();
  const RoundResult r = eng.take_result();
  REQUIRE(r.packets.size() == 2);
  CHECK(r.packets[0].outcome == Outcome::expired);
  CHECK(r.packets[0].start_tx == -1);
  CHECK(r.packets[1].outcome == Outcome::sent);
  // the replacement sees an empty channel estimate: entry 3 * (0 + 1),
  // transmitting three slots later
  CHECK(r.packets[1].entry == 3);
  CHECK(r.packets[1].start_tx == 13);
  CHECK(r.stats.replacement_arrivals == 1);
  CHECK(r.stats.expired == 1);
  CHECK(r.stats.sent == 1);
}

TEST_CASE("single vehicle: constant access delay") {
  ProtocolParams p;  // defaults: m = 2, 24-mini busy slot
  p.n_vehicles = 1;
  p.n_cycles = 50;
  p.rng_seed = 77;
  RoundOptions opt;
  opt.keep_packets = true;
  opt.warmup_cycles = 0;
  const RoundResult r = run_round_cidc(p, 0, opt);
  CHECK(r.stats.generated == 50);
  CHECK(r.stats.collided == 0);
  CHECK(r.stats.sent >= 49);  // the last arrival may still be waiting
  const double want_dc = p.m_param * p.t_slot + p.t_difs;
  const double want_do = want_dc + (p.k_busy - 1) * p.t_slot - p.t_difs + p.t_slot;
  for (const PacketRecord& pk : r.packets) {
    if (pk.outcome != Outcome::sent) continue;
    CHECK(pk.d_c == doctest::Approx(want_dc).epsilon(1e-12));
    CHECK(pk.d_o == doctest::Approx(want_do).epsilon(1e-12));
  }
}

TEST_CASE("rounds are deterministic in the seed") {
  ProtocolParams p;
  p.n_vehicles = 50;
  p.n_cycles = 3;
  p.rng_seed = 42;
  RoundOptions opt;
  opt.keep_packets = true;
  opt.record_trace = true;
  opt.warmup_cycles = 0;

  const RoundResult a = run_round_cidc(p, 3, opt);
  const RoundResult b = run_round_cidc(p, 3, opt);
  std::ostringstream pa, pb, ta, tb;
  write_packets(pa, Protocol::cidc, a.packets);
  write_packets(pb, Protocol::cidc, b.packets);
  write_slot_trace(ta, a.trace);
  write_slot_trace(tb, b.trace);
  CHECK(pa.str() == pb.str());
  CHECK(ta.str() == tb.str());
  CHECK(a.stats.generated == b.stats.generated);

  const RoundResult c = run_round_cidc(p, 4, opt);
  std::ostringstream pc;
  write_packets(pc, Protocol::cidc, c.packets);
  CHECK(pa.str() != pc.str());
}

TEST_CASE("crowded round keeps every invariant") {
  ProtocolParams p;
  p.n_vehicles = 150;
  p.n_cycles = 20;
  p.rng_seed = 9;
  RoundOptions opt;
  opt.warmup_cycles = 5;
  const RoundResult r = run_round_cidc(p, 0, opt);
  CHECK(r.stats.generated == 150 * 20);
  CHECK(r.stats.generated == r.stats.sent + r.stats.collided + r.stats.expired);
  CHECK(r.stats.ratio_violations == 0);
  CHECK(r.stats.alignment_violations == 0);
  CHECK(r.stats.bookkeeping_defects == 0);
  CHECK(r.stats.ratio_max <= 0.5 + 1e-12);
  CHECK(r.stats.upsilon_minis > 0);
  CHECK(r.stats.collision_pairs == r.stats.alignment_checks);
}

TEST_CASE("churn degrades estimation but not accounting") {
  ProtocolParams p;
  p.n_vehicles = 100;
  p.n_cycles = 15;
  p.delta_churn = 3.0;
  p.rng_seed = 5;
  RoundOptions opt;
  opt.warmup_cycles = 5;
  opt.audit_collisions = false;  // the alignment identity needs exact estimates
  const RoundResult r = run_round_cidc(p, 1, opt);
  CHECK(r.stats.generated == 100 * 15);
  CHECK(r.stats.generated == r.stats.sent + r.stats.collided + r.stats.expired);
  CHECK(r.stats.bookkeeping_defects == 0);
  CHECK(r.stats.p_col() >= 0.0);
  CHECK(r.stats.p_col() < 1.0);
}
