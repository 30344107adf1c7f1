#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>

#include "ccae/config.hpp"
#include "ccae/io.hpp"
#include "ccae/pipeline.hpp"
#include "doctest.h"

using namespace ccae;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("ccae_test_" + std::to_string(std::random_device{}()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

UePlacement small_placement() {
  ScenarioConfig cfg;
  cfg.num_users = 40;
  cfg.trajectory.num_points = 10;
  cfg.anchor_fraction = 0.2;
  return generate_placement(cfg);
}

}  // namespace

TEST_CASE("key/value parsing") {
  const auto kv = KeyValueConfig::parse(
      "# comment\n"
      "a.b = 3   # trailing\n"
      "\n"
      "  name=hello world \n"
      "list = 1, 2,3\n"
      "flag = true\n");
  CHECK(kv.get_uint("a.b", 0) == 3);
  CHECK(kv.get_string("name", "") == "hello world");
  CHECK(kv.get_list("list", {}) == std::vector<std::string>{"1", "2", "3"});
  CHECK(kv.get_bool("flag", false));
  CHECK(kv.get_double("missing", 2.5) == 2.5);
  CHECK(kv.unused_keys().empty());

  CHECK_THROWS_AS(KeyValueConfig::parse("a = 1\na = 2\n"), std::invalid_argument);
  CHECK_THROWS_AS(KeyValueConfig::parse("novalue\n"), std::invalid_argument);
  CHECK_THROWS_AS(KeyValueConfig::parse("x = abc").get_double("x", 0.0), std::invalid_argument);
  CHECK_THROWS_AS(KeyValueConfig::parse("x = -1").get_uint("x", 0), std::invalid_argument);
  CHECK_THROWS_AS(KeyValueConfig::load("/nonexistent/ccae.cfg"), std::runtime_error);
}

TEST_CASE("shortest round-trip doubles") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  Rng rng(1);
  for (int k = 0; k < 1000; ++k) {
    const double x = rng.normal() * std::pow(10.0, rng.uniform(-30.0, 30.0));
    CHECK(parse_double(format_double(x)) == x);
  }
  CHECK(std::isnan(parse_double("nan")));
  CHECK(parse_double("inf") == std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(parse_double("1.0x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_double(""), std::invalid_argument);
}

TEST_CASE("experiment config round trip, hash and unknown keys") {
  const ExperimentConfig defaults;
  const auto kv = defaults.to_key_values();
  const auto again = ExperimentConfig::from_key_values(KeyValueConfig::parse(kv.to_string()));
  CHECK(again.hash() == defaults.hash());
  CHECK(defaults.hash().size() == 16);
  CHECK(again.to_key_values().to_string() == kv.to_string());

  auto changed = KeyValueConfig::parse("train.epochs = 7\nchannel.mode = nlos\n");
  const auto cfg = ExperimentConfig::from_key_values(changed);
  CHECK(cfg.train.epochs == 7);
  CHECK(cfg.channel.mode == ChannelMode::NLoS);
  CHECK(cfg.hash() != defaults.hash());

  CHECK_THROWS_AS(ExperimentConfig::from_key_values(KeyValueConfig::parse("train.epoch = 7\n")),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_key_values(KeyValueConfig::parse("train.learning_rate = 0\n")),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_key_values(KeyValueConfig::parse("experiment.recipes = fancy\n")),
                  std::invalid_argument);
}

TEST_CASE("positions round trip") {
  TempDir dir;
  const auto placement = small_placement();
  io::write_positions(dir / "p.csv", placement, {"00000000deadbeef"});
  io::Provenance prov;
  const auto back = io::read_positions(dir / "p.csv", &prov);
  CHECK(prov.config_hash == std::optional<std::string>("00000000deadbeef"));
  REQUIRE(back.size() == placement.size());
  for (std::size_t n = 0; n < placement.size(); ++n) CHECK(back.positions[n] == placement.positions[n]);
  CHECK(back.anchor_indices == placement.anchor_indices);
  CHECK(back.trajectory_indices == placement.trajectory_indices);
}

TEST_CASE("CSI binary layout and round trip") {
  TempDir dir;
  CsiMatrix csi(2, 3);
  csi << std::complex<double>(1, -2), std::complex<double>(0.5, 0), std::complex<double>(0, 0.25),
      std::complex<double>(-1, 1), std::complex<double>(3, 4), std::complex<double>(-0.125, 8);
  io::write_csi_binary(dir / "c.bin", csi);
  const std::string bytes = slurp(dir / "c.bin");
  REQUIRE(bytes.size() == 4 + 2 + 4 + 4 + 2 * 3 * 8);
  CHECK(bytes.substr(0, 4) == "CCSI");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);
  CHECK(static_cast<unsigned char>(bytes[5]) == 0);
  CHECK(static_cast<unsigned char>(bytes[6]) == 2);
  CHECK(static_cast<unsigned char>(bytes[10]) == 3);
  // First re of row 0, then its im, as little-endian float32.
  float re = 0.0f, im = 0.0f;
  std::memcpy(&re, bytes.data() + 14, 4);
  std::memcpy(&im, bytes.data() + 18, 4);
  CHECK(re == 1.0f);
  CHECK(im == -2.0f);
  float row1 = 0.0f;
  std::memcpy(&row1, bytes.data() + 14 + 3 * 8, 4);
  CHECK(row1 == -1.0f);

  CHECK(io::read_csi_binary(dir / "c.bin") == csi);
  CHECK(io::read_csi(dir / "c.bin") == csi);

  spit(dir / "bad.bin", "CCSX");
  CHECK_THROWS_AS(io::read_csi_binary(dir / "bad.bin"), std::runtime_error);
  spit(dir / "short.bin", bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(io::read_csi_binary(dir / "short.bin"), std::runtime_error);
}

TEST_CASE("CSI csv round trip is exact in double precision") {
  TempDir dir;
  Rng rng(2);
  CsiMatrix csi(5, 4);
  for (Eigen::Index r = 0; r < 5; ++r)
    for (Eigen::Index c = 0; c < 4; ++c) csi(r, c) = {rng.normal(), rng.normal()};
  io::write_csi_csv(dir / "c.csv", csi);
  CHECK(io::read_csi_csv(dir / "c.csv") == csi);
  CHECK(io::read_csi(dir / "c.csv") == csi);
}

TEST_CASE("features round trip keeps scaling metadata") {
  TempDir dir;
  Rng rng(3);
  CsiMatrix csi(6, 8);
  for (Eigen::Index r = 0; r < 6; ++r)
    for (Eigen::Index c = 0; c < 8; ++c) csi(r, c) = {rng.normal(), rng.normal()};
  for (ScalingMode mode : {ScalingMode::UnitNorm, ScalingMode::Standardize}) {
    const auto f = extract_features(csi, mode);
    io::write_features(dir / "f.csv", f, {"abc"});
    const auto back = io::read_features(dir / "f.csv");
    CHECK(back.mode == mode);
    CHECK(back.values == f.values);
    CHECK(back.mean.size() == f.mean.size());
    if (mode == ScalingMode::Standardize) {
      CHECK(back.mean == f.mean);
      CHECK(back.stddev == f.stddev);
    }
  }
}

TEST_CASE("constraints round trip") {
  TempDir dir;
  const auto placement = small_placement();
  ConstraintSet set = build_anchor_constraints(placement.anchor_indices, placement.positions, 0.5);
  set.append(build_trajectory_constraints(placement.trajectory_indices, 5.0, 2, 2.0));
  io::write_constraints(dir / "k.csv", set);
  const auto back = io::read_constraints(dir / "k.csv");
  REQUIRE(back.size() == set.size());
  for (std::size_t n = 0; n < set.size(); ++n) {
    const auto &a = set.items[n], &b = back.items[n];
    CHECK(a.kind == b.kind);
    CHECK(a.i == b.i);
    CHECK(a.j == b.j);
    CHECK(a.anchor.has_value() == b.anchor.has_value());
    if (a.anchor) CHECK(*a.anchor == *b.anchor);
    CHECK(a.target == b.target);
    CHECK(a.weight == b.weight);
  }
}

TEST_CASE("chart round trip is bit exact") {
  TempDir dir;
  const auto placement = small_placement();
  Rng rng(4);
  Eigen::MatrixXd emb(static_cast<Eigen::Index>(placement.size()), 2);
  for (Eigen::Index r = 0; r < emb.rows(); ++r) emb.row(r) << rng.normal() * 1e3, rng.normal() / 3.0;
  io::write_chart(dir / "chart.csv", emb, placement, {"feedface00000000"});
  const auto chart = io::read_chart(dir / "chart.csv");
  CHECK(chart.embedding == emb);
  CHECK(chart.true_xy == true_xy(placement));
  CHECK(chart.anchor_indices == placement.anchor_indices);
  CHECK(chart.trajectory_indices == placement.trajectory_indices);
  CHECK(chart.provenance.config_hash == std::optional<std::string>("feedface00000000"));

  const std::string text = slurp(dir / "chart.csv");
  CHECK(text.rfind("# config_hash=feedface00000000\nid,u,v,true_x,true_y,is_anchor,traj_order\n", 0) == 0);
}

TEST_CASE("network checkpoint layout and round trip") {
  TempDir dir;
  const Network net = init_network(std::vector<std::size_t>{4, 3, 2, 3, 4}, Activation::Tanh, 9);
  io::write_network(dir / "n.ccnn", net);
  const std::string bytes = slurp(dir / "n.ccnn");
  CHECK(bytes.substr(0, 4) == "CCNN");
  CHECK(static_cast<unsigned char>(bytes[6]) == 4);  // layer count
  std::size_t expected = 4 + 2 + 4;
  for (const auto* part : {&net.encoder, &net.decoder})
    for (const auto& l : *part)
      expected += 4 + 4 + 1 + 8 * static_cast<std::size_t>(l.weights.size() + l.bias.size());
  CHECK(bytes.size() == expected);

  const Network back = io::read_network(dir / "n.ccnn");
  REQUIRE(back.encoder.size() == net.encoder.size());
  REQUIRE(back.decoder.size() == net.decoder.size());
  for (std::size_t l = 0; l < net.encoder.size(); ++l) {
    CHECK(back.encoder[l].weights == net.encoder[l].weights);
    CHECK(back.encoder[l].bias == net.encoder[l].bias);
    CHECK(back.encoder[l].activation == net.encoder[l].activation);
  }
  for (std::size_t l = 0; l < net.decoder.size(); ++l) CHECK(back.decoder[l].weights == net.decoder[l].weights);

  spit(dir / "trunc.ccnn", bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(io::read_network(dir / "trunc.ccnn"), std::runtime_error);
}

TEST_CASE("report file layout") {
  TempDir dir;
  MetricsReport a;
  a.scores = {{1, 0.9, 0.8}, {5, 0.7, 0.6}};
  a.kruskal_stress = 0.25;
  MetricsReport b = a;
  b.reference = ReferenceSpace::FeatureSpace;
  const std::vector<MetricsReport> reports{a, b};
  io::write_report(dir / "r.csv", reports, {"0123456789abcdef"});
  CHECK(slurp(dir / "r.csv") ==
        "# config_hash=0123456789abcdef\n"
        "metric,K,value\n"
        "TW,1,0.9\nTW,5,0.7\nCT,1,0.8\nCT,5,0.6\nKS,,0.25\n"
        "TW_feature,1,0.9\nTW_feature,5,0.7\nCT_feature,1,0.8\nCT_feature,5,0.6\nKS_feature,,0.25\n");
}

TEST_CASE("malformed files") {
  TempDir dir;
  spit(dir / "p.csv", "id,x,y,z,is_anchor,traj_order\n0,1,2\n");
  CHECK_THROWS_AS(io::read_positions(dir / "p.csv"), std::runtime_error);
  CHECK_THROWS_AS(io::read_chart(dir / "missing.csv"), std::runtime_error);
}
