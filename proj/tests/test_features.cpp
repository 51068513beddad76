#include <catch_amalgamated.hpp>

#include <random>

#include "subcast/features.hpp"
#include "subcast/synth.hpp"

using namespace subcast;

namespace {

const synth::Scenario& scenario() {
  static const synth::Scenario sc = [] {
    auto cfg = synth::ScenarioConfig::preset("smooth");
    cfg.regions = 3;
    cfg.weeks = 320;
    cfg.tx_per_week = 10;
    cfg.seed = 77;
    return synth::generate(cfg);
  }();
  return sc;
}

const PanelData& panel() {
  static const PanelData p = build_panel(synth::to_inputs(scenario()), synth::panel_config(scenario()));
  return p;
}

}  // namespace

TEST_CASE("tag parsing and canonical rendering", "[features]") {
  const auto t = parse_tag("PCSB");
  CHECK(t.contains(Modality::P));
  CHECK(t.contains(Modality::B));
  CHECK_FALSE(t.contains(Modality::I));
  CHECK(parse_tag("SB").str() == "SB");
  CHECK(parse_tag("GBP").str() == "PBG");
  CHECK(parse_tag("GBP") == parse_tag("PBG"));
  CHECK(parse_tag("PS/nsi").sentiment == SentimentVariant::nsi_only);
  CHECK(parse_tag("PSB/pca/ndbi").str() == "PSB/pca/ndbi");
  CHECK_THROWS_AS(parse_tag("PX"), InputError);
  CHECK_THROWS_AS(parse_tag("PP"), InputError);
  CHECK_THROWS_AS(parse_tag(""), InputError);
  CHECK_THROWS_AS(parse_tag("P/nsi"), InputError);
  CHECK_THROWS_AS(parse_tag("PS/foo"), InputError);
  CHECK_THROWS_AS(parse_tag("PS/nsi/pca"), InputError);
}

TEST_CASE("block widths follow the table of modalities", "[features]") {
  const std::map<std::string, int> widths{{"P", 12},     {"PC", 24},     {"PCS", 39}, {"PCSB", 54},
                                          {"PCSBI", 66}, {"PCSBIG", 90}, {"G", 24},   {"PS/nsi", 19},
                                          {"PS/pca", 20}, {"B/ndbi", 15}};
  for (const auto& [tag, w] : widths) {
    CHECK(parse_tag(tag).width() == w);
    CHECK(static_cast<int>(column_names(parse_tag(tag)).size()) == w);
  }
  for (const auto& tag : default_tag_chain()) {
    const auto d = assemble(panel(), "R01", parse_tag(tag), 2, 0, 300);
    CHECK(d.X.cols() == parse_tag(tag).width());
  }
  const auto groups = column_groups(parse_tag("PCSBIG"));
  REQUIRE(groups.size() == 6);
  CHECK(groups[3].block == 'B');
  CHECK(groups[3].start == 39);
}

TEST_CASE("rows are horizon invariant and targets shift", "[features]") {
  const FeatureFrame f(panel(), "R02", parse_tag("PCSBIG"));
  const auto d2 = assemble(f, 2, 0, 320);
  const auto d34 = assemble(f, 34, 0, 320);
  CHECK(d2.weeks.front() == 20);
  CHECK(d2.weeks.back() == 317);
  CHECK(d34.weeks.back() == 285);
  for (int i = 0; i < d34.rows(); ++i) {
    CHECK(d34.weeks[i] == d2.weeks[i]);
    CHECK(d34.X.row(i) == d2.X.row(i));
    CHECK(d34.y(i) == f.price()[d34.weeks[i] + 34]);
    CHECK(d2.y(i) == f.price()[d2.weeks[i] + 2]);
  }
  // block order is canonical: P lags first, then counts
  const auto& price = panel().region("R02").index.price;
  CHECK(d2.X(0, 0) == price[19]);
  CHECK(d2.X(0, 11) == price[8]);
  CHECK(d2.X(0, 12) == panel().region("R02").index.counts[19]);
  CHECK(d2.X(0, 66) == panel().global->price[19]);
  CHECK(d2.X(0, 78) == panel().global->counts[19]);
}

TEST_CASE("empty assembly names the binding constraint", "[features]") {
  CHECK_THROWS_WITH(assemble(panel(), "R01", parse_tag("PB"), 2, 0, 20),
                    Catch::Matchers::ContainsSubstring("decision week >= 20"));
  CHECK_THROWS_WITH(assemble(panel(), "R01", parse_tag("P"), 34, 290, 320),
                    Catch::Matchers::ContainsSubstring("target availability"));
  CHECK_THROWS_AS(assemble(panel(), "nowhere", parse_tag("P"), 2, 0, 300), InputError);
}

TEST_CASE("B source swap only touches B columns", "[features]") {
  const auto sar = assemble(panel(), "R03", parse_tag("PCSBIG"), 10, 0, 300);
  const auto ndbi = assemble(panel(), "R03", parse_tag("PCSBIG/ndbi"), 10, 0, 300);
  REQUIRE(sar.X.rows() == ndbi.X.rows());
  for (Eigen::Index j = 0; j < sar.X.cols(); ++j) {
    const bool in_b = j >= 39 && j < 54;
    CHECK((sar.X.col(j) == ndbi.X.col(j)) == !in_b);
  }
}

TEST_CASE("standardizer uses training statistics only", "[features]") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd train(50, 3);
  for (int i = 0; i < 50; ++i) train.row(i) << 5 + 2 * nd(rng), -1 + nd(rng), 7.0;
  const Standardizer s(train);
  const auto z = s.transform(train);
  for (int j = 0; j < 2; ++j) {
    CHECK(std::fabs(z.col(j).mean()) < 1e-12);
    CHECK(std::sqrt(z.col(j).array().square().mean()) == Catch::Approx(1.0).margin(1e-12));
  }
  CHECK(z.col(2).cwiseAbs().maxCoeff() == 0.0);

  Eigen::MatrixXd val = train.topRows(5).array() + 100.0;
  const auto zv = s.transform(val);
  for (int i = 0; i < 5; ++i) CHECK(zv(i, 0) == Catch::Approx(z(i, 0) + 100.0 / s.scale()(0)).margin(1e-9));
  CHECK_THROWS_AS(Standardizer(train.topRows(1)), InputError);
}

TEST_CASE("weekly rates aggregate by tenor", "[features]") {
  const WeekGrid g(make_date(2015, 1, 4), 3);
  std::vector<RateObservation> obs{{make_date(2015, 1, 1), 1.0, "3M"},
                                   {make_date(2015, 1, 2), 2.0, "3M"},
                                   {make_date(2015, 1, 2), 9.0, "1M"},
                                   {make_date(2015, 1, 15), 4.0, "3M"}};
  CHECK(weekly_rates(obs, g).values == std::vector<double>{1.5, 1.5, 4.0});
  RatesConfig last;
  last.aggregation = WeeklyAggregation::last;
  CHECK(weekly_rates(obs, g, last).values == std::vector<double>{2.0, 2.0, 4.0});
  RatesConfig one_m;
  one_m.tenor = "1M";
  CHECK(weekly_rates(obs, g, one_m).values == std::vector<double>{9.0, 9.0, 9.0});

  std::stringstream ss;
  write_rates_csv(ss, obs);
  CHECK(read_rates_csv(ss, "r.csv").size() == 4);
}

TEST_CASE("dataset export carries a column-group schema", "[features][io]") {
  const auto d = assemble(panel(), "R01", parse_tag("PSB"), 6, 0, 60);
  std::stringstream ss;
  write_dataset_csv(ss, d, panel().grid);
  std::string header;
  std::getline(ss, header);
  CHECK(header.rfind("week_end_date,region,P_lag1", 0) == 0);
  CHECK(header.find("target_h6") != std::string::npos);
  const auto j = dataset_schema(d);
  CHECK(j["column_groups"].size() == 3);
  CHECK(j["columns"].size() == 42);
  CHECK(j["rows"] == d.rows());
}
