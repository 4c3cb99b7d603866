#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fieldforge/corpus.hpp"
#include "fieldforge/fusion.hpp"
#include "fieldforge/image.hpp"
#include "fieldforge/pipeline.hpp"
#include "fieldforge/png_io.hpp"

namespace fieldforge::service {

inline std::string base64_encode(std::string_view bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const std::uint32_t v = (static_cast<std::uint8_t>(bytes[i]) << 16) |
                            (static_cast<std::uint8_t>(bytes[i + 1]) << 8) |
                            static_cast<std::uint8_t>(bytes[i + 2]);
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back(kAlphabet[v & 63]);
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = static_cast<std::uint8_t>(bytes[i]) << 16;
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (static_cast<std::uint8_t>(bytes[i]) << 16) |
                            (static_cast<std::uint8_t>(bytes[i + 1]) << 8);
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

inline std::string base64_decode(std::string_view text) {
  const auto value_of = [](char c) -> int {
    if (c >= 'A' && c <= 'Z')
      return c - 'A';
    if (c >= 'a' && c <= 'z')
      return c - 'a' + 26;
    if (c >= '0' && c <= '9')
      return c - '0' + 52;
    if (c == '+')
      return 62;
    if (c == '/')
      return 63;
    return -1;
  };

  if (text.size() % 4 != 0)
    throw std::invalid_argument("base64: length not a multiple of 4");
  std::string out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=') {
        if (i + 4 != text.size() || k < 2)
          throw std::invalid_argument("base64: misplaced padding");
        vals[k] = 0;
        ++pad;
      } else {
        if (pad > 0)
          throw std::invalid_argument("base64: data after padding");
        vals[k] = value_of(c);
        if (vals[k] < 0)
          throw std::invalid_argument(std::string("base64: bad character '") +
                                      c + "'");
      }
    }
    const std::uint32_t v = (vals[0] << 18) | (vals[1] << 12) |
                            (vals[2] << 6) | vals[3];
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    if (pad < 2)
      out.push_back(static_cast<char>((v >> 8) & 0xff));
    if (pad < 1)
      out.push_back(static_cast<char>(v & 0xff));
  }
  return out;
}

struct Bindings {
  std::function<pipeline::ClassProbs(const Image&)> classifier;
  std::function<std::vector<fusion::ScoredBox>(const Image&)> identifier;
};

// Minimal JSON-over-HTTP prediction server. Models are bound once at
// construction and treated as read-only; requests hold no other state.
class PredictionService {
public:
  explicit PredictionService(Bindings bindings)
      : bindings_(std::move(bindings)) {
    install_routes();
  }

  ~PredictionService() { stop(); }

  PredictionService(const PredictionService&) = delete;
  PredictionService& operator=(const PredictionService&) = delete;

  // port 0 picks a free port; find it via port() afterwards.
  void start(const std::string& host, int port) {
    if (thread_.joinable())
      throw std::logic_error("PredictionService: already started");
    if (port == 0) {
      port_ = server_.bind_to_any_port(host);
      if (port_ < 0)
        throw std::runtime_error("PredictionService: bind failed on " + host);
      thread_ = std::thread([this] { server_.listen_after_bind(); });
    } else {
      if (!server_.bind_to_port(host, port))
        throw std::runtime_error("PredictionService: bind failed on " + host +
                                 ":" + std::to_string(port));
      port_ = port;
      thread_ = std::thread([this] { server_.listen_after_bind(); });
    }
    server_.wait_until_ready();
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  int port() const { return port_; }

private:
  static void send_json(httplib::Response& res, int status,
                        const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  bool has_model(const std::string& name) const {
    if (name == "classifier")
      return static_cast<bool>(bindings_.classifier);
    if (name == "identifier")
      return static_cast<bool>(bindings_.identifier);
    return false;
  }

  void install_routes() {
    server_.Get("/", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200,
                {{"routes",
                  {"/", "/algorithms", "/status", "/predict/<algorithm>"}}});
    });

    server_.Get("/algorithms",
                [this](const httplib::Request&, httplib::Response& res) {
                  nlohmann::json names = nlohmann::json::array();
                  for (const char* name : {"identifier", "classifier"})
                    if (has_model(name))
                      names.push_back(name);
                  send_json(res, 200, {{"algorithms", std::move(names)}});
                });

    server_.Get("/status",
                [this](const httplib::Request&, httplib::Response& res) {
                  send_json(res, 200,
                            {{"identifier", has_model("identifier")
                                                ? "ready"
                                                : "unavailable"},
                             {"classifier", has_model("classifier")
                                                ? "ready"
                                                : "unavailable"}});
                });

    server_.Post(
        R"(/predict/([^/]+))",
        [this](const httplib::Request& req, httplib::Response& res) {
          const std::string algorithm = req.matches[1];
          if (algorithm != "identifier" && algorithm != "classifier") {
            send_json(res, 404,
                      {{"error", "unknown algorithm '" + algorithm + "'"},
                       {"algorithms", {"identifier", "classifier"}}});
            return;
          }
          if (!has_model(algorithm)) {
            send_json(res, 503,
                      {{"error", "algorithm '" + algorithm +
                                     "' has no model bound"}});
            return;
          }

          Image img;
          try {
            const auto body = nlohmann::json::parse(req.body);
            if (!body.contains("image") || !body["image"].is_string())
              throw std::invalid_argument(
                  "request needs a base64 'image' field");
            const std::string png =
                base64_decode(body["image"].get<std::string>());
            img = decode_png(reinterpret_cast<const std::uint8_t*>(
                                 png.data()),
                             png.size());
          } catch (const std::exception& e) {
            send_json(res, 400, {{"error", e.what()}});
            return;
          }

          try {
            if (algorithm == "classifier") {
              const auto probs = bindings_.classifier(img);
              nlohmann::json by_class;
              for (std::size_t i = 0; i < probs.size(); ++i)
                by_class[std::string(
                    corpus::to_string(corpus::all_classes[i]))] = probs[i];
              const auto arg =
                  std::max_element(probs.begin(), probs.end()) -
                  probs.begin();
              send_json(
                  res, 200,
                  {{"algorithm", "classifier"},
                   {"probabilities", std::move(by_class)},
                   {"predicted",
                    std::string(corpus::to_string(
                        corpus::all_classes[static_cast<std::size_t>(
                            arg)]))}});
            } else {
              const auto boxes = bindings_.identifier(img);
              nlohmann::json rows = nlohmann::json::array();
              for (const auto& b : boxes)
                rows.push_back({{"box", {b.x1, b.y1, b.x2, b.y2}},
                                {"score", b.score},
                                {"label", b.label}});
              send_json(res, 200,
                        {{"algorithm", "identifier"},
                         {"detections", std::move(rows)}});
            }
          } catch (const std::exception& e) {
            send_json(res, 500, {{"error", e.what()}});
          }
        });
  }

  Bindings bindings_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
};

} // namespace fieldforge::service
