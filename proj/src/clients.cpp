#include "anchorframe/clients.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <semaphore>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "anchorframe/error.hpp"
#include "builtin_data.hpp"

namespace anchorframe {

using nlohmann::json;

void ServiceEndpoint::validate() const {
  if (base_url.empty()) throw Error(ErrorCode::kConfig, "endpoint base_url is empty");
  if (timeout_ms <= 0) throw Error(ErrorCode::kConfig, "endpoint timeout must be > 0");
  if (max_retries < 0) throw Error(ErrorCode::kConfig, "endpoint max_retries must be >= 0");
  if (max_in_flight < 1) {
    throw Error(ErrorCode::kConfig, "endpoint max_in_flight must be >= 1");
  }
}

bool offline_forced() {
  const char* v = std::getenv("ANCHORFRAME_OFFLINE");
  return v != nullptr && std::string_view(v) == "1";
}

// ---- base64 ----------------------------------------------------------------

namespace {
constexpr std::string_view kB64 =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += kB64[(v >> 6) & 63];
    out += kB64[v & 63];
  }
  if (i + 1 == bytes.size()) {
    const std::uint32_t v = bytes[i] << 16;
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += kB64[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error(ErrorCode::kParse, "base64 length not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::uint32_t v = 0;
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      v <<= 6;
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        ++pad;
        continue;
      }
      const auto pos = kB64.find(c);
      if (pos == std::string_view::npos || pad > 0) {
        throw Error(ErrorCode::kParse, "invalid base64 at offset " + std::to_string(i + k));
      }
      v |= static_cast<std::uint32_t>(pos);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

// ---- mocks -------------------------------------------------------------------

MockDetector::MockDetector(GroundTruth truth, MockDetectorConfig cfg)
    : truth_(std::move(truth)), cfg_(cfg) {
  if (!(cfg_.jitter_sigma >= 0.0) || !(cfg_.score_noise >= 0.0)) {
    throw Error(ErrorCode::kConfig, "mock noise levels must be >= 0");
  }
}

std::vector<Detection> MockDetector::detect_boxes(const Frame& frame, FrameIndex t,
                                                  std::string_view object_prompt) const {
  if (object_prompt.empty()) throw Error(ErrorCode::kInput, "empty object prompt");
  if (t >= truth_.size()) {
    throw Error(ErrorCode::kInput,
                "frame " + std::to_string(t) + " has no ground-truth entry");
  }
  const TruthFrame& tf = truth_[t];
  if (tf.visibility < cfg_.visibility_threshold) return {};
  SplitMix64 rng(SplitMix64::hash(cfg_.seed, 0xDE7EC7ULL, t));
  BoundingBox box = tf.box;
  if (cfg_.jitter_sigma > 0.0) {
    box.x1 += cfg_.jitter_sigma * rng.normal();
    box.y1 += cfg_.jitter_sigma * rng.normal();
    box.x2 += cfg_.jitter_sigma * rng.normal();
    box.y2 += cfg_.jitter_sigma * rng.normal();
    box = {std::clamp(box.x1, 0.0, static_cast<double>(frame.width())),
           std::clamp(box.y1, 0.0, static_cast<double>(frame.height())),
           std::clamp(box.x2, 0.0, static_cast<double>(frame.width())),
           std::clamp(box.y2, 0.0, static_cast<double>(frame.height()))};
    if (!box.valid()) return {};
  }
  double score = tf.visibility;
  if (cfg_.score_noise > 0.0) {
    score *= 1.0 - std::min(1.0, std::abs(cfg_.score_noise * rng.normal()));
  }
  return {Detection{box, std::clamp(score, 0.0, 1.0)}};
}

MockAttributeScorer::MockAttributeScorer(GroundTruth truth) : truth_(std::move(truth)) {}

double MockAttributeScorer::attribute_visibility(const Frame& /*crop*/, Attribute attribute,
                                                 const CropRegion& region) const {
  if (region.frame >= truth_.size()) {
    throw Error(ErrorCode::kInput,
                "frame " + std::to_string(region.frame) + " has no ground-truth entry");
  }
  const TruthFrame& tf = truth_[region.frame];
  std::optional<BoundingBox> patch;
  double visibility = 0.0;
  if (attribute == Attribute::kObjectVisibility) {
    patch = tf.box;
    visibility = tf.visibility;
  } else {
    patch = tf.attribute_box;
    visibility = tf.attribute_visibility;
  }
  if (!patch || visibility <= 0.0 || !region.box.valid()) return 0.0;
  const double iw = std::min(patch->x2, region.box.x2) - std::max(patch->x1, region.box.x1);
  const double ih = std::min(patch->y2, region.box.y2) - std::max(patch->y1, region.box.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double coverage = (iw * ih) / box_area(*patch);
  return std::clamp(visibility * coverage, 0.0, 1.0);
}

// ---- prompt templates --------------------------------------------------------

PromptTemplates PromptTemplates::builtin() {
  static const PromptTemplates templates = parse(detail::builtin_prompts_text());
  return templates;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open prompt templates " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(text);
}

PromptTemplates PromptTemplates::parse(std::string_view text) {
  PromptTemplates out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::kParse, "prompt templates line " + std::to_string(lineno) +
                                         ": expected attribute<TAB>question");
    }
    out.questions_[attribute_from_string(line.substr(0, tab))] = line.substr(tab + 1);
  }
  for (auto a : {Attribute::kColor, Attribute::kMaterial, Attribute::kPart, Attribute::kShape,
                 Attribute::kStyle, Attribute::kObjectVisibility}) {
    if (!out.questions_.contains(a)) {
      throw Error(ErrorCode::kParse,
                  "prompt templates: missing entry for " + std::string(to_string(a)));
    }
  }
  return out;
}

const std::string& PromptTemplates::question(Attribute attribute) const {
  return questions_.at(attribute);
}

// ---- HTTP ----------------------------------------------------------------------

namespace detail {

class HttpJsonClient {
 public:
  explicit HttpJsonClient(ServiceEndpoint ep)
      : ep_(std::move(ep)), slots_(std::max(ep_.max_in_flight, 1)) {
    ep_.validate();
    const auto scheme = ep_.base_url.find("://");
    const auto slash =
        ep_.base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (slash == std::string::npos) {
      origin_ = ep_.base_url;
    } else {
      origin_ = ep_.base_url.substr(0, slash);
      prefix_ = ep_.base_url.substr(slash);
      while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }
  }

  std::string post(const std::string& path, const json& body) const {
    const std::string payload = body.dump();
    const std::string target = prefix_ + path;
    std::string last_error;
    slots_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{slots_};
    for (int attempt = 0; attempt <= ep_.max_retries; ++attempt) {
      httplib::Client client(origin_);
      const auto timeout = std::chrono::milliseconds(ep_.timeout_ms);
      client.set_connection_timeout(timeout);
      client.set_read_timeout(timeout);
      client.set_write_timeout(timeout);
      auto res = client.Post(target, payload, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status < 200 || res->status >= 300) {
        throw Error(ErrorCode::kProtocol, ep_.base_url + path + " answered HTTP " +
                                              std::to_string(res->status));
      }
      return res->body;
    }
    throw Error(ErrorCode::kServiceUnavailable,
                ep_.base_url + path + " unavailable after " +
                    std::to_string(ep_.max_retries + 1) + " attempts: " + last_error);
  }

 private:
  ServiceEndpoint ep_;
  std::string origin_;
  std::string prefix_;
  mutable std::counting_semaphore<> slots_;
};

}  // namespace detail

namespace {

json parse_body(std::string_view body) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("response is not JSON: ") + e.what());
  }
}

double number_field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw Error(ErrorCode::kProtocol, std::string("response field '") + key +
                                          "' missing or not a number");
  }
  const double v = it->get<double>();
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::kProtocol, std::string("response field '") + key + "' not finite");
  }
  return v;
}

}  // namespace

std::vector<Detection> parse_detect_response(std::string_view body) {
  const json j = parse_body(body);
  if (!j.is_object() || !j.contains("boxes") || !j["boxes"].is_array()) {
    throw Error(ErrorCode::kProtocol, "detect response lacks a 'boxes' array");
  }
  std::vector<Detection> out;
  for (const auto& b : j["boxes"]) {
    if (!b.is_object()) throw Error(ErrorCode::kProtocol, "detect box is not an object");
    Detection d;
    d.box = {number_field(b, "x1"), number_field(b, "y1"), number_field(b, "x2"),
             number_field(b, "y2")};
    if (!d.box.valid()) throw Error(ErrorCode::kProtocol, "detect box is degenerate");
    d.s_text = std::clamp(number_field(b, "score"), 0.0, 1.0);
    out.push_back(d);
  }
  std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    return a.s_text > b.s_text;
  });
  return out;
}

double parse_score_response(std::string_view body) {
  const json j = parse_body(body);
  if (!j.is_object()) throw Error(ErrorCode::kProtocol, "score response is not an object");
  const double raw = number_field(j, "score");
  const double clamped = std::clamp(raw, 0.0, 1.0);
  if (clamped != raw) {
    std::cerr << "warning: score " << raw << " outside [0,1], clamped to " << clamped
              << "\n";
  }
  return clamped;
}

RemoteDetector::RemoteDetector(ServiceEndpoint endpoint)
    : http_(std::make_unique<detail::HttpJsonClient>(std::move(endpoint))) {}

RemoteDetector::~RemoteDetector() = default;

std::vector<Detection> RemoteDetector::detect_boxes(const Frame& frame, FrameIndex /*t*/,
                                                    std::string_view object_prompt) const {
  if (object_prompt.empty()) throw Error(ErrorCode::kInput, "empty object prompt");
  const json body{{"image_ppm_b64", base64_encode(write_netpbm(frame))},
                  {"prompt", std::string(object_prompt)}};
  return parse_detect_response(http_->post("/detect", body));
}

RemoteAttributeScorer::RemoteAttributeScorer(ServiceEndpoint endpoint,
                                             PromptTemplates templates)
    : http_(std::make_unique<detail::HttpJsonClient>(std::move(endpoint))),
      templates_(std::move(templates)) {}

RemoteAttributeScorer::~RemoteAttributeScorer() = default;

double RemoteAttributeScorer::attribute_visibility(const Frame& crop, Attribute attribute,
                                                   const CropRegion& /*region*/) const {
  const json body{{"image_ppm_b64", base64_encode(write_netpbm(crop))},
                  {"attribute", std::string(to_string(attribute))},
                  {"question", templates_.question(attribute)}};
  return parse_score_response(http_->post("/score", body));
}

}  // namespace anchorframe
