#include "doctest.h"

#include <filesystem>

#include "json.hpp"

#include "srn/io.hpp"
#include "support/test_helpers.hpp"

using namespace srn;
using namespace srn::testing;

TEST_SUITE_BEGIN("io");

namespace {
const std::string kConfigs = std::string(SRN_SOURCE_DIR) + "/configs";

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::create_directories(dir);
  return dir;
}
}  // namespace

TEST_CASE("network document loads with the documented layout") {
  const ReactionNetwork net = load_network_json(kConfigs + "/michaelis_menten.json");
  CHECK(net.species_count() == 4);
  CHECK(net.reaction_count() == 3);
  CHECK(net.system_size() == 1.0);
  CHECK(net.species_names() ==
        std::vector<std::string>{"Enzyme", "Substrate", "Complex", "Product"});
  CHECK(net.param_names() == std::vector<std::string>{"theta1", "theta2", "theta3"});
  CHECK(net.stoichiometry() == make_michaelis_menten().stoichiometry());
}

TEST_CASE("network documents with problems are rejected") {
  CHECK_THROWS_AS(parse_network_json(R"({"species": ["A"], "reactions": [], "extra": 1})"),
                  std::invalid_argument);
  // a reaction that changes nothing
  CHECK_THROWS_AS(parse_network_json(
                      R"({"species": ["A"], "reactions":
                          [{"reactants": {"A": 1}, "products": {"A": 1}, "param": "k"}]})"),
                  std::invalid_argument);
  // unknown species in a reaction
  CHECK_THROWS_AS(parse_network_json(
                      R"({"species": ["A"], "reactions":
                          [{"reactants": {"B": 1}, "products": {}, "param": "k"}]})"),
                  std::invalid_argument);
  // non-positive system size
  CHECK_THROWS_AS(parse_network_json(
                      R"({"species": ["A"], "omega": 0.0, "reactions":
                          [{"reactants": {"A": 1}, "products": {}, "param": "k"}]})"),
                  std::invalid_argument);
  // unknown key inside a reaction
  CHECK_THROWS_AS(parse_network_json(
                      R"({"species": ["A"], "reactions":
                          [{"reactants": {"A": 1}, "products": {}, "param": "k", "rate": 2}]})"),
                  std::invalid_argument);
}

TEST_CASE("shared parameter names map to one kinetic constant") {
  const ReactionNetwork net = parse_network_json(
      R"({"species": ["A", "B"], "reactions": [
            {"reactants": {"A": 1}, "products": {"B": 1}, "param": "k"},
            {"reactants": {"B": 1}, "products": {"A": 1}, "param": "k"}]})");
  CHECK(net.param_count() == 1);
  CHECK(net.reactions()[0].rate_param == 0);
  CHECK(net.reactions()[1].rate_param == 0);
}

TEST_CASE("dataset round trip preserves structure") {
  Dataset ds;
  ds.model.times = Eigen::VectorXd::LinSpaced(17, 0.0, 80.0);
  ds.model.observed.assign(17, {2});
  ds.model.batch = 1;
  ds.model.noise_variances[2] = 4.0;
  for (int h = 0; h < 17; ++h)
    ds.y.push_back(Eigen::VectorXd::Constant(1, 50.0 + h * 0.25));
  ds.provenance.present = true;
  ds.provenance.seed = 42;
  ds.provenance.theta = Eigen::Vector3d(0.001, 0.005, 0.01);
  ds.provenance.config_hash = "deadbeef";

  const std::string text = dataset_to_json_text(ds);
  const Dataset back = parse_dataset_json(text);
  CHECK(back.model == ds.model);
  REQUIRE(back.y.size() == ds.y.size());
  for (int h = 0; h < 17; ++h) CHECK(back.y[h] == ds.y[h]);
  CHECK(back.provenance.present);
  CHECK(back.provenance.seed == 42);
  CHECK(back.provenance.config_hash == "deadbeef");

  // serialization is stable: one observation row per time point
  const auto doc = nlohmann::json::parse(text);
  CHECK(doc.at("times").size() == 17);
  CHECK(doc.at("observed").size() == 17);
  CHECK(doc.at("y").size() == 17);

  const auto dir = temp_dir("srn_io_test");
  save_dataset_json(ds, (dir / "ds.json").string());
  const Dataset from_file = load_dataset_json((dir / "ds.json").string());
  CHECK(from_file.model == ds.model);
}

TEST_CASE("dataset dimension mismatches are rejected") {
  const std::string bad = R"({
    "times": [0.0, 1.0], "observed": [[3], [3]], "batch": 2,
    "sigma": {"3": 4.0}, "y": [[1.0, 2.0], [1.0]]
  })";
  CHECK_THROWS_AS(parse_dataset_json(bad), std::invalid_argument);
  const std::string unknown = R"({
    "times": [0.0], "observed": [[3]], "batch": 1,
    "sigma": {"3": 4.0}, "y": [[1.0]], "note": "hi"
  })";
  CHECK_THROWS_AS(parse_dataset_json(unknown), std::invalid_argument);
}

TEST_CASE("hash and number formatting are stable") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(0xcbf29ce484222325ULL) == "cbf29ce484222325");
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  // shortest round-trip representation survives parsing
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_SUITE_END();
