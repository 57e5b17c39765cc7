#include <doctest.h>

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "anchorframe/clients.hpp"
#include "anchorframe/error.hpp"
#include "support.hpp"

using namespace anchorframe;
using nlohmann::json;

namespace {

/// Local HTTP server on an ephemeral port for the remote clients.
class TestServer {
 public:
  TestServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~TestServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  ServiceEndpoint endpoint(int retries = 2) const {
    ServiceEndpoint ep{"http://127.0.0.1:" + std::to_string(port_)};
    ep.max_retries = retries;
    ep.timeout_ms = 2000;
    return ep;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

ErrorCode error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kIo;
}

GroundTruth simple_truth() {
  GroundTruth g;
  g.width = 100;
  g.height = 100;
  g.frames.push_back({{10, 10, 50, 50}, 1.0, 1.0, BoundingBox{20, 20, 40, 40}});
  g.frames.push_back({{10, 10, 50, 50}, 0.0, 0.0, BoundingBox{20, 20, 40, 40}});
  g.frames.push_back({{10, 10, 50, 50}, 0.5, 0.5, BoundingBox{20, 20, 40, 40}});
  return g;
}

}  // namespace

TEST_CASE("base64 round trip") {
  CHECK(base64_encode(std::vector<std::uint8_t>{'M', 'a', 'n'}) == "TWFu");
  CHECK(base64_encode(std::vector<std::uint8_t>{'M', 'a'}) == "TWE=");
  CHECK(base64_encode(std::vector<std::uint8_t>{'M'}) == "TQ==");
  for (std::size_t n = 0; n < 20; ++n) {
    std::vector<std::uint8_t> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(static_cast<std::uint8_t>(i * 37 + 5));
    CHECK(base64_decode(base64_encode(v)) == v);
  }
  CHECK_THROWS_AS(base64_decode("abc"), Error);
  CHECK_THROWS_AS(base64_decode("ab!d"), Error);
}

TEST_CASE("mock detector passthrough and occlusion") {
  const GroundTruth g = simple_truth();
  const MockDetector det(g);
  const Frame f(100, 100, 3);
  const auto d0 = det.detect_boxes(f, 0, "car");
  REQUIRE(d0.size() == 1);
  CHECK(d0[0].box == g[0].box);
  CHECK(d0[0].s_text == 1.0);
  CHECK(det.detect_boxes(f, 1, "car").empty());
  CHECK(det.detect_boxes(f, 2, "car")[0].s_text == 0.5);
  CHECK(error_of([&] { det.detect_boxes(f, 9, "car"); }) == ErrorCode::kInput);

  MockDetectorConfig noisy{2.0, 0.1, 0.25, 7};
  const MockDetector a(g, noisy), b(g, noisy);
  const auto da = a.detect_boxes(f, 0, "car");
  CHECK(da == b.detect_boxes(f, 0, "car"));
  CHECK_FALSE(da[0].box == g[0].box);
  CHECK(da[0].s_text <= 1.0);
}

TEST_CASE("mock attribute scorer") {
  const MockAttributeScorer s(simple_truth());
  const Frame crop(10, 10, 3);
  CHECK(s.attribute_visibility(crop, Attribute::kColor, {0, {10, 10, 50, 50}}) == 1.0);
  CHECK(s.attribute_visibility(crop, Attribute::kColor, {1, {10, 10, 50, 50}}) == 0.0);
  CHECK(s.attribute_visibility(crop, Attribute::kColor, {2, {10, 10, 50, 50}}) == 0.5);
  CHECK(s.attribute_visibility(crop, Attribute::kColor, {0, {10, 10, 30, 50}}) == 0.5);
  CHECK(s.attribute_visibility(crop, Attribute::kColor, {0, {60, 60, 90, 90}}) == 0.0);
  CHECK(s.attribute_visibility(crop, Attribute::kObjectVisibility, {2, {10, 10, 50, 50}}) == 0.5);
}

TEST_CASE("mock attribute scorer on a half covered patch") {
  SceneSpec spec = testing::static_scene(160, 120, 2);
  AttributePatchSpec patch;
  patch.box = {0.25, 0.25, 0.75, 0.75};
  patch.visible_interval = std::array<std::size_t, 2>{0, 1};
  spec.target.attribute_patch = patch;
  OccluderSpec occ;
  occ.size = {10, 40};
  occ.texture = {TextureKind::kFlat, 1, {0, 0, 0}, {0, 0, 0}};
  occ.path.start = {70, 40};
  occ.active_interval = {1, 1};
  spec.occluder = occ;
  const auto [video, truth] = generate_scene(spec);
  const MockAttributeScorer s(truth);
  const double area = 20.0 * 20.0;
  CHECK(s.attribute_visibility(video[0], Attribute::kColor, {0, truth[0].box}) == 1.0);
  CHECK(std::abs(s.attribute_visibility(video[1], Attribute::kColor, {1, truth[1].box}) - 0.5) <=
        1.0 / area);
}

TEST_CASE("prompt templates") {
  const auto t = PromptTemplates::builtin();
  CHECK_FALSE(t.question(Attribute::kColor).empty());
  CHECK_FALSE(t.question(Attribute::kObjectVisibility).empty());
  CHECK_THROWS_AS(PromptTemplates::parse("color\tWhat color?\n"), Error);
}

TEST_CASE("response parsing") {
  const auto d = parse_detect_response(
      R"({"boxes":[{"x1":0,"y1":0,"x2":5,"y2":5,"score":0.2},{"x1":1,"y1":1,"x2":4,"y2":4,"score":0.9}]})");
  REQUIRE(d.size() == 2);
  CHECK(d[0].s_text == 0.9);
  CHECK(parse_detect_response(R"({"boxes":[]})").empty());
  CHECK(error_of([] { parse_detect_response("not json"); }) == ErrorCode::kProtocol);
  CHECK(error_of([] { parse_detect_response(R"({"boxes":[{"x1":0}]})"); }) ==
        ErrorCode::kProtocol);
  CHECK(error_of([] {
          parse_detect_response(R"({"boxes":[{"x1":5,"y1":0,"x2":1,"y2":5,"score":1}]})");
        }) == ErrorCode::kProtocol);
  CHECK(parse_score_response(R"({"score":0.25})") == 0.25);
  CHECK(parse_score_response(R"({"score":1.7})") == 1.0);
  CHECK(error_of([] { parse_score_response(R"({"score":"high"})"); }) ==
        ErrorCode::kProtocol);
}

TEST_CASE("remote detector and scorer round trip") {
  TestServer ts;
  std::string seen_prompt;
  std::mutex mu;
  ts.server().Post("/detect", [&](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body);
    const auto bytes = base64_decode(body["image_ppm_b64"].get<std::string>());
    const Frame f = read_netpbm(bytes);
    {
      std::lock_guard lock(mu);
      seen_prompt = body["prompt"];
    }
    json out{{"boxes", json::array({json{{"x1", 1}, {"y1", 2}, {"x2", f.width()}, {"y2", f.height()},
                                         {"score", 0.75}}})}};
    res.set_content(out.dump(), "application/json");
  });
  ts.server().Post("/score", [&](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body);
    const double score = body["attribute"] == "color" ? 0.625 : 0.125;
    res.set_content(json{{"score", score}}.dump(), "application/json");
  });

  const RemoteDetector det(ts.endpoint());
  const auto d = det.detect_boxes(Frame(12, 9, 3), 0, "red car");
  REQUIRE(d.size() == 1);
  CHECK(d[0].box == BoundingBox{1, 2, 12, 9});
  CHECK(d[0].s_text == 0.75);
  CHECK(seen_prompt == "red car");

  const RemoteAttributeScorer scorer(ts.endpoint());
  CHECK(scorer.attribute_visibility(Frame(4, 4, 3), Attribute::kColor, {}) == 0.625);
  CHECK(scorer.attribute_visibility(Frame(4, 4, 3), Attribute::kPart, {}) == 0.125);
}

TEST_CASE("retry exhaustion raises service unavailable") {
  TestServer ts;
  std::atomic<int> hits{0};
  ts.server().Post("/detect", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
  });
  const RemoteDetector det(ts.endpoint(2));
  CHECK(error_of([&] { det.detect_boxes(Frame(4, 4, 3), 0, "car"); }) ==
        ErrorCode::kServiceUnavailable);
  CHECK(hits == 3);
}

TEST_CASE("transient failures are retried") {
  TestServer ts;
  std::atomic<int> hits{0};
  ts.server().Post("/score", [&](const httplib::Request&, httplib::Response& res) {
    if (hits++ < 2) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"score":0.5})", "application/json");
  });
  const RemoteAttributeScorer scorer(ts.endpoint(2));
  CHECK(scorer.attribute_visibility(Frame(4, 4, 3), Attribute::kColor, {}) == 0.5);
  CHECK(hits == 3);
}

TEST_CASE("client errors and malformed bodies are protocol errors") {
  TestServer ts;
  std::atomic<int> hits{0};
  ts.server().Post("/detect", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 400;
  });
  ts.server().Post("/score", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"score\":", "application/json");
  });
  CHECK(error_of([&] { RemoteDetector(ts.endpoint()).detect_boxes(Frame(4, 4, 3), 0, "car"); }) ==
        ErrorCode::kProtocol);
  CHECK(hits == 1);
  CHECK(error_of([&] {
          RemoteAttributeScorer(ts.endpoint()).attribute_visibility(Frame(4, 4, 3),
                                                                    Attribute::kColor, {});
        }) == ErrorCode::kProtocol);
}

TEST_CASE("unreachable service") {
  ServiceEndpoint ep{"http://127.0.0.1:1"};
  ep.max_retries = 1;
  ep.timeout_ms = 200;
  CHECK(error_of([&] { RemoteDetector(ep).detect_boxes(Frame(4, 4, 3), 0, "car"); }) ==
        ErrorCode::kServiceUnavailable);
}

TEST_CASE("requests in flight are bounded") {
  TestServer ts;
  std::atomic<int> active{0}, peak{0};
  ts.server().new_task_queue = [] { return new httplib::ThreadPool(16); };
  ts.server().Post("/score", [&](const httplib::Request&, httplib::Response& res) {
    const int now = ++active;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    --active;
    res.set_content(R"({"score":1})", "application/json");
  });
  ServiceEndpoint ep = ts.endpoint();
  ep.max_in_flight = 2;
  const RemoteAttributeScorer scorer(ep);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] { scorer.attribute_visibility(Frame(4, 4, 3), Attribute::kColor, {}); });
  }
  for (auto& t : threads) t.join();
  CHECK(peak.load() <= 2);
  CHECK(peak.load() >= 1);
}

TEST_CASE("endpoint validation") {
  ServiceEndpoint ep{""};
  CHECK_THROWS_AS(ep.validate(), Error);
  ep.base_url = "http://x";
  ep.max_in_flight = 0;
  CHECK_THROWS_AS(ep.validate(), Error);
}

TEST_CASE("offline flag") {
  ::setenv("ANCHORFRAME_OFFLINE", "1", 1);
  CHECK(offline_forced());
  ::setenv("ANCHORFRAME_OFFLINE", "0", 1);
  CHECK_FALSE(offline_forced());
  ::unsetenv("ANCHORFRAME_OFFLINE");
  CHECK_FALSE(offline_forced());
}
