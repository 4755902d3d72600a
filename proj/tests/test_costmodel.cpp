#include <doctest.h>

#include <cmath>
#include <random>

#include "deepcam/costmodel.hpp"
#include "deepcam/netexec.hpp"
#include "support.hpp"

using namespace deepcam;
using namespace deepcam::testing;

namespace {

// Hand-written table so the arithmetic below does not lean on the defaults.
CostTable toy_table() {
  return CostTable::from_config(KeyValueConfig::parse(R"(
defaults = false
search_energy_pj.64x256 = 3
write_energy_pj.64x256 = 2
search_cycles.64x256 = 2
write_cycles_per_row.64x256 = 1
finalize_energy_pj = 0.5
finalize_cycles = 0
)"));
}

const ConvGeometry kFirst{1, 5, 5, 1, 0};
const Dims kFirstInput{1, 32, 32};

}  // namespace

TEST_CASE("empty trace folds to zero") {
  const CostReport r = fold_trace(CostTrace{}, CostTable::defaults());
  CHECK(r.layers.empty());
  CHECK(r.searches == 0);
  CHECK(r.cycles == 0);
  CHECK(r.energy_pj == 0);
  CHECK(r.utilization == 0);
  CHECK_FALSE(r.baseline_cycles);
}

TEST_CASE("first-layer example, weight stationary") {
  const CostReport r = fold_trace(
      schedule_conv_trace(kFirstInput, 6, kFirst, Dataflow::kWeightStationary, 64, 256), toy_table());
  CHECK(r.searches == 784);
  CHECK(r.row_writes == 6);
  CHECK(r.layer(0).tiles == 1);
  CHECK(r.utilization == doctest::Approx(6.0 / 64));
  CHECK(r.utilization_peak == doctest::Approx(6.0 / 64));
  CHECK(r.cycles == 784 * 2 + 6 * 1);
  // 784 searches, each finalizing 6 rows, plus 6 writes
  CHECK(r.energy_pj == doctest::Approx(784 * 3 + 784 * 6 * 0.5 + 6 * 2));
}

TEST_CASE("first-layer example, activation stationary") {
  const CostReport r = fold_trace(
      schedule_conv_trace(kFirstInput, 6, kFirst, Dataflow::kActivationStationary, 64, 256), toy_table());
  CHECK(r.searches == 78);
  CHECK(r.row_writes == 784);
  CHECK(r.layer(0).tiles == 13);
  CHECK(r.utilization == doctest::Approx((12 * 1.0 + 16.0 / 64) / 13));
  CHECK(r.utilization_peak == doctest::Approx(1.0));
  CHECK(r.cycles == 78 * 2 + 784);
  CHECK(r.energy_pj == doctest::Approx(78 * 3 + 784 * 0.5 * 6 + 784 * 2));
}

TEST_CASE("systolic baseline closed form") {
  CHECK(systolic_cycles(12, 14, 25) == 49);
  CHECK(systolic_cycles(1, 1, 1) == 25);
  CHECK(systolic_cycles(24, 14, 25) == 2 * systolic_cycles(12, 14, 25));
  CHECK(systolic_cycles(13, 15, 25) == 4 * 49);
  std::mt19937_64 rng(1);
  const Conv2d conv = make_conv(rng, 1, 6, 5, 5, 1, 0, false, false);
  CHECK(systolic_cycles(conv, kFirstInput) == systolic_cycles(6, 784, 25));
  CHECK_THROWS_AS(systolic_cycles(LayerDescriptor{Relu{}}, kFirstInput), ConfigError);
}

TEST_CASE("compare") {
  const CostTrace t = schedule_conv_trace(kFirstInput, 6, kFirst, Dataflow::kActivationStationary, 64, 256);
  const CostReport r = fold_trace(t, CostTable::defaults());
  const RatioSummary same = compare(r, r);
  CHECK(*same.total_cycles == 1.0);
  CHECK(*same.total_energy == 1.0);
  CHECK(*same.layers.at(0).cycles == 1.0);

  const CostReport sys = systolic_report(t);
  const RatioSummary vs = compare(r, sys);
  CHECK(*vs.total_cycles == doctest::Approx(systolic_cycles(6, 784, 25) / r.cycles));
  CHECK_FALSE(vs.total_energy);

  CostTrace other = t;
  other.dot_layers[5] = other.dot_layers[0];
  CHECK_THROWS_AS(compare(r, fold_trace(other, CostTable::defaults())), ConfigError);
}

TEST_CASE("folding is linear") {
  const CostTable table = CostTable::defaults();
  const CostTrace a = schedule_conv_trace(kFirstInput, 6, kFirst, Dataflow::kActivationStationary, 64, 512);
  const CostTrace b = schedule_conv_trace(kFirstInput, 6, kFirst, Dataflow::kActivationStationary, 64, 512, 2);
  CostTrace ab = a;
  ab.append(b);
  const CostReport ra = fold_trace(a, table), rb = fold_trace(b, table), rab = fold_trace(ab, table);
  CHECK(rab.cycles == doctest::Approx(ra.cycles + rb.cycles));
  CHECK(rab.energy_pj == doctest::Approx(ra.energy_pj + rb.energy_pj));
  CHECK(rab.searches == ra.searches + rb.searches);
  CHECK(*rab.baseline_cycles == doctest::Approx(*ra.baseline_cycles + *rb.baseline_cycles));
  CHECK(rb.searches == 2 * ra.searches);
}

TEST_CASE("cost table") {
  const CostTable d = CostTable::defaults();
  CHECK_NOTHROW(d.check_shape());
  CHECK(d.cam.size() == 16);
  const CostTable round = CostTable::from_config(d.to_config());
  CHECK(round.at(128, 768).search_energy_pj == d.at(128, 768).search_energy_pj);

  const CostTable toy = toy_table();
  CHECK_THROWS_AS(toy.at(128, 256), ConfigError);
  CHECK_THROWS_AS(CostTable::from_config(KeyValueConfig::parse("bogus = 1")), ConfigError);
  CHECK_THROWS_AS(CostTable::from_config(KeyValueConfig::parse("search_energy_pj.100x256 = 1")), ConfigError);

  KeyValueConfig flat = d.to_config();
  flat.set("search_energy_pj.128x256", "0.1");
  CHECK_THROWS_AS(CostTable::from_config(flat).check_shape(), ConfigError);
}

TEST_CASE("dry run matches the executor trace") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 15; ++t) {
    const NetworkModel m = random_model(rng);
    const std::size_t dots = m.dot_layers().size();
    std::vector<std::size_t> ks;
    for (std::size_t d = 0; d < dots; ++d) ks.push_back(256 * (1 + rng() % 4));
    for (auto df : {Dataflow::kWeightStationary, Dataflow::kActivationStationary}) {
      ExecutionPlan plan;
      plan.dataflow = df;
      plan.cam.rows = 64;
      plan.hash_lengths = ks;
      std::vector<ActivationTensor> batch{random_tensor(rng, m.input), random_tensor(rng, m.input)};
      const CostTrace full = run_network(m, plan, batch).trace;
      CHECK(schedule_trace(m, df, 64, ks, 2) == full);
    }
  }
}

TEST_CASE("energy grows with hash length and variable lengths are sandwiched") {
  std::mt19937_64 rng(3);
  NetworkModel m;
  m.input = {1, 28, 28};
  m.layers.emplace_back(make_conv(rng, 1, 6, 5, 5, 1, 2, true, true));
  m.layers.emplace_back(MaxPool{2, 2});
  m.layers.emplace_back(make_conv(rng, 6, 16, 5, 5, 1, 0, true, true));
  m.layers.emplace_back(MaxPool{2, 2});
  m.layers.emplace_back(make_linear(rng, 400, 120, true, true));
  m.layers.emplace_back(make_linear(rng, 120, 84, true, true));
  m.layers.emplace_back(make_linear(rng, 84, 10, true, false));
  const CostTable table = CostTable::defaults();
  auto energy = [&](std::vector<std::size_t> ks) {
    return fold_trace(schedule_trace(m, Dataflow::kActivationStationary, 64, ks), table);
  };
  for (std::size_t d = 0; d < 5; ++d) {
    double prev = -1;
    for (std::size_t k : {256, 512, 768, 1024}) {
      std::vector<std::size_t> ks(5, 512);
      ks[d] = k;
      const double e = energy(ks).layer(static_cast<std::uint32_t>(m.dot_layers()[d])).energy_pj;
      CHECK(e > prev);
      prev = e;
    }
  }
  const double lo = energy(std::vector<std::size_t>(5, 256)).energy_pj;
  const double hi = energy(std::vector<std::size_t>(5, 1024)).energy_pj;
  const double mid = energy({256, 768, 1024, 512, 256}).energy_pj;
  CHECK(lo <= mid);
  CHECK(mid <= hi);

  // AS never needs more cycles than WS when patches outnumber kernels
  const auto ws = fold_trace(schedule_trace(m, Dataflow::kWeightStationary, 64, {1024, 1024, 1024, 1024, 1024}), table);
  const auto as = fold_trace(schedule_trace(m, Dataflow::kActivationStationary, 64, {1024, 1024, 1024, 1024, 1024}), table);
  for (const auto& l : as.layers) {
    if (l.kind != "dot" || l.schedule->patches < l.schedule->kernels) continue;
    CHECK(l.cycles <= ws.layer(l.layer).cycles);
  }
}

TEST_CASE("csv report") {
  const CostReport r = fold_trace(
      schedule_conv_trace(kFirstInput, 6, kFirst, Dataflow::kActivationStationary, 64, 256), toy_table());
  const std::string csv = report_csv(r);
  CHECK(csv.rfind("layer,dataflow,rows,word_bits,searches,writes,cycles,utilization,energy_pj,baseline_cycles\n", 0) ==
        0);
  CHECK(csv.find("\n0,as,64,256,78,784,940,") != std::string::npos);
  CHECK(csv.find("\ntotal,") != std::string::npos);
  CHECK(report_csv(r, true).find(",940,1,") != std::string::npos);
}
