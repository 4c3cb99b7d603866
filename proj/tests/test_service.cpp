#include <catch_amalgamated.hpp>

#include <random>
#include <string>
#include <vector>

#include <httplib.h>

#include "fieldforge/png_io.hpp"
#include "fieldforge/service.hpp"
#include "support.hpp"

using namespace fieldforge;
using service::base64_decode;
using service::base64_encode;

namespace {

std::string png_payload(const Image& img) {
  const auto bytes = encode_png(img);
  return base64_encode(std::string_view(
      reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

service::Bindings demo_bindings() {
  service::Bindings b;
  b.classifier = [](const Image& img) {
    pipeline::ClassProbs probs{0.1, 0.1, 0.1, 0.1};
    const Rgb p = img.at(0, 0);
    const std::size_t hot = p[0] > p[1] ? 1 : 0;
    probs[hot] = 0.7;
    return probs;
  };
  b.identifier = [](const Image&) {
    return std::vector<fusion::ScoredBox>{{0.0, 0.0, 8.0, 6.0, 0.9, 1},
                                          {8.0, 0.0, 16.0, 6.0, 0.4, 1}};
  };
  return b;
}

struct RunningService {
  service::PredictionService server;
  httplib::Client client;

  explicit RunningService(service::Bindings bindings)
      : server(std::move(bindings)),
        client("127.0.0.1", started_port(server)) {
    client.set_connection_timeout(5);
    client.set_read_timeout(5);
  }

private:
  static int started_port(service::PredictionService& s) {
    s.start("127.0.0.1", 0);
    return s.port();
  }
};

} // namespace

TEST_CASE("base64 matches the well-known reference vectors") {
  CHECK(base64_encode("") == "");
  CHECK(base64_encode("f") == "Zg==");
  CHECK(base64_encode("fo") == "Zm8=");
  CHECK(base64_encode("foo") == "Zm9v");
  CHECK(base64_encode("foob") == "Zm9vYg==");
  CHECK(base64_encode("fooba") == "Zm9vYmE=");
  CHECK(base64_encode("foobar") == "Zm9vYmFy");

  CHECK(base64_decode("Zg==") == "f");
  CHECK(base64_decode("Zm9vYmE=") == "fooba");
  CHECK(base64_decode("") == "");
}

TEST_CASE("base64 round-trips arbitrary bytes") {
  std::string all;
  for (int v = 0; v < 256; ++v)
    all.push_back(static_cast<char>(v));
  CHECK(base64_decode(base64_encode(all)) == all);

  std::mt19937 rng(604);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<std::size_t> len(0, 40);
  for (int trial = 0; trial < 200; ++trial) {
    std::string raw(len(rng), '\0');
    for (auto& c : raw)
      c = static_cast<char>(byte(rng));
    CHECK(base64_decode(base64_encode(raw)) == raw);
  }
}

TEST_CASE("base64 decode rejects malformed text") {
  CHECK_THROWS_AS(base64_decode("abc"), std::invalid_argument);
  CHECK_THROWS_AS(base64_decode("a==="), std::invalid_argument);
  CHECK_THROWS_AS(base64_decode("=AAA"), std::invalid_argument);
  CHECK_THROWS_AS(base64_decode("AA=A"), std::invalid_argument);
  CHECK_THROWS_AS(base64_decode("TQ==TQ=="), std::invalid_argument);
  CHECK_THROWS_AS(base64_decode("TWE*"), std::invalid_argument);
  CHECK_THROWS_AS(base64_decode("TW\nE="), std::invalid_argument);
}

TEST_CASE("service lists its routes, algorithms, and model status") {
  RunningService rs(demo_bindings());
  REQUIRE(rs.server.port() > 0);

  auto root = rs.client.Get("/");
  REQUIRE(root);
  CHECK(root->status == 200);
  const auto routes = nlohmann::json::parse(root->body);
  REQUIRE(routes.contains("routes"));
  CHECK(routes["routes"].size() == 4);

  auto algorithms = rs.client.Get("/algorithms");
  REQUIRE(algorithms);
  const auto names = nlohmann::json::parse(algorithms->body)["algorithms"];
  CHECK(names == nlohmann::json({"identifier", "classifier"}));

  auto status = rs.client.Get("/status");
  REQUIRE(status);
  const auto st = nlohmann::json::parse(status->body);
  CHECK(st["identifier"] == "ready");
  CHECK(st["classifier"] == "ready");
}

TEST_CASE("service classifies an uploaded PNG") {
  RunningService rs(demo_bindings());
  const Image img = testsupport::solid_image(8, 6, {200, 40, 40});
  const nlohmann::json req = {{"image", png_payload(img)}};

  auto res = rs.client.Post("/predict/classifier", req.dump(),
                            "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  const auto body = nlohmann::json::parse(res->body);
  CHECK(body["algorithm"] == "classifier");
  CHECK(body["predicted"] == "multiple_diseases");
  REQUIRE(body["probabilities"].size() == 4);
  double sum = 0.0;
  for (const char* name :
       {"healthy", "multiple_diseases", "rust", "scab"}) {
    REQUIRE(body["probabilities"].contains(name));
    sum += body["probabilities"][name].get<double>();
  }
  CHECK(sum == Catch::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("service returns detections for the identifier") {
  RunningService rs(demo_bindings());
  const nlohmann::json req = {
      {"image", png_payload(testsupport::gradient_image(16, 12))}};

  auto res = rs.client.Post("/predict/identifier", req.dump(),
                            "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  const auto body = nlohmann::json::parse(res->body);
  CHECK(body["algorithm"] == "identifier");
  REQUIRE(body["detections"].size() == 2);
  CHECK(body["detections"][0]["box"].size() == 4);
  CHECK(body["detections"][0]["score"].get<double>() ==
        Catch::Approx(0.9));
  CHECK(body["detections"][1]["box"][0].get<double>() == Catch::Approx(8.0));
}

TEST_CASE("service rejects unknown algorithms with a 404") {
  RunningService rs(demo_bindings());
  auto res = rs.client.Post("/predict/oracle", "{}", "application/json");
  REQUIRE(res);
  CHECK(res->status == 404);
  const auto body = nlohmann::json::parse(res->body);
  CHECK(body.contains("error"));
  CHECK(body["algorithms"] == nlohmann::json({"identifier", "classifier"}));
}

TEST_CASE("service answers 503 when no model is bound") {
  service::Bindings only_classifier;
  only_classifier.classifier = demo_bindings().classifier;
  RunningService rs(std::move(only_classifier));

  auto algorithms = rs.client.Get("/algorithms");
  REQUIRE(algorithms);
  CHECK(nlohmann::json::parse(algorithms->body)["algorithms"] ==
        nlohmann::json({"classifier"}));

  auto status = rs.client.Get("/status");
  REQUIRE(status);
  CHECK(nlohmann::json::parse(status->body)["identifier"] == "unavailable");

  const nlohmann::json req = {
      {"image", png_payload(testsupport::solid_image(4, 4, {0, 0, 0}))}};
  auto res = rs.client.Post("/predict/identifier", req.dump(),
                            "application/json");
  REQUIRE(res);
  CHECK(res->status == 503);
}

TEST_CASE("service answers 400 for malformed requests") {
  RunningService rs(demo_bindings());

  auto not_json = rs.client.Post("/predict/classifier", "pure chaos",
                                 "application/json");
  REQUIRE(not_json);
  CHECK(not_json->status == 400);

  auto missing_field = rs.client.Post("/predict/classifier", "{}",
                                      "application/json");
  REQUIRE(missing_field);
  CHECK(missing_field->status == 400);
  CHECK(nlohmann::json::parse(missing_field->body)["error"]
            .get<std::string>()
            .find("image") != std::string::npos);

  const nlohmann::json bad_b64 = {{"image", "@@@@"}};
  auto broken = rs.client.Post("/predict/classifier", bad_b64.dump(),
                               "application/json");
  REQUIRE(broken);
  CHECK(broken->status == 400);

  const nlohmann::json not_png = {{"image", base64_encode("not a png")}};
  auto garbled = rs.client.Post("/predict/classifier", not_png.dump(),
                                "application/json");
  REQUIRE(garbled);
  CHECK(garbled->status == 400);
}

TEST_CASE("service surfaces model failures as a 500") {
  service::Bindings angry;
  angry.classifier = [](const Image&) -> pipeline::ClassProbs {
    throw std::runtime_error("checkpoint corrupted");
  };
  RunningService rs(std::move(angry));

  const nlohmann::json req = {
      {"image", png_payload(testsupport::solid_image(4, 4, {1, 2, 3}))}};
  auto res = rs.client.Post("/predict/classifier", req.dump(),
                            "application/json");
  REQUIRE(res);
  CHECK(res->status == 500);
  CHECK(nlohmann::json::parse(res->body)["error"] == "checkpoint corrupted");
}

TEST_CASE("service cannot be started twice") {
  service::PredictionService server(demo_bindings());
  server.start("127.0.0.1", 0);
  CHECK_THROWS_AS(server.start("127.0.0.1", 0), std::logic_error);
  server.stop();
}
