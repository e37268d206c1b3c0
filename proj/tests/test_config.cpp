#include <doctest.h>

#include "smoothflow/config.hpp"
#include "smoothflow/errors.hpp"

using namespace smoothflow;
using nlohmann::json;

namespace {

json minimal() { return json{{"schema_version", 1}, {"potential", {{"kind", "ring"}}}}; }

}  // namespace

TEST_CASE("minimal config takes the documented defaults") {
  const RunConfig c = RunConfig::from_json(minimal());
  CHECK(c.seed == 0);
  CHECK(c.dataset.chains == 1000);
  CHECK(c.dataset.burn == 100);
  CHECK(c.dataset.steps == 10);
  CHECK(c.model.layers == 4);
  CHECK(c.model.components == 40);
  CHECK(c.model.hidden == std::vector<int>{100, 100});
  CHECK(c.train.iterations == 2000);
  CHECK(c.train.batch_size == 1000);
  CHECK(c.train.lr == 5e-4);
  CHECK(c.rootfind.eps == 1e-10);
  CHECK(c.potential.radii == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("config round trips through json") {
  json j = minimal();
  j["seed"] = 42;
  j["model"] = {{"layers", 2}, {"components", 8}, {"direction", "inverse"}, {"hidden", {16}}};
  j["train"] = {{"omega_f", 1e-3}, {"iterations", 10}};
  j["rootfind"] = {{"bins", 4}};
  const RunConfig c = RunConfig::from_json(j);
  CHECK(c.model.direction == LayerDirection::Inverse);
  CHECK(c.train.omega_f == 1e-3);
  CHECK(c.rootfind.bins == 4);
  const RunConfig back = RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
}

TEST_CASE("unknown keys are rejected at every level") {
  for (const char* section : {"dataset", "model", "train", "rootfind", "md", "potential"}) {
    json j = minimal();
    if (std::string(section) == "potential")
      j["potential"]["colour"] = 1;
    else
      j[section] = {{"colour", 1}};
    CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);
  }
  json top = minimal();
  top["extra"] = true;
  CHECK_THROWS_AS(RunConfig::from_json(top), ConfigError);
}

TEST_CASE("schema version and value checks") {
  json j = minimal();
  j["schema_version"] = 2;
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);
  j.erase("schema_version");
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);
  j = minimal();
  j["model"] = {{"layers", 0}};
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);
  j = minimal();
  j["train"] = {{"lr", "fast"}};
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);
  j = minimal();
  j["rootfind"] = {{"bins", 1}};
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);
  j = minimal();
  j["potential"] = {{"kind", "volcano"}};
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);
  CHECK_THROWS_AS(RunConfig::load("/nonexistent/config.json"), ConfigError);
}
