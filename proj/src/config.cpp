#include "anchorframe/config.hpp"

#include <fstream>

#include "anchorframe/error.hpp"
#include "json_util.hpp"

namespace anchorframe {

using nlohmann::json;

void RunConfig::validate() const {
  selector.validate();
  tracker.validate();
  if (backend == Backend::kRemote) {
    detector.validate();
    vlm.validate();
  }
  if (!(mock_detector.jitter_sigma >= 0.0) || !(mock_detector.score_noise >= 0.0)) {
    throw Error(ErrorCode::kConfig, "mock noise levels must be >= 0");
  }
  if (!(mock_detector.visibility_threshold >= 0.0 &&
        mock_detector.visibility_threshold <= 1.0)) {
    throw Error(ErrorCode::kConfig, "mock visibility_threshold must lie in [0,1]");
  }
}

Backend RunConfig::effective_backend() const {
  return offline_forced() ? Backend::kMock : backend;
}

namespace {

constexpr auto kCfg = ErrorCode::kConfig;

void read_endpoint(const json& j, ServiceEndpoint& ep, const char* ctx) {
  detail::check_keys(j, {"base_url", "timeout_ms", "max_retries", "max_in_flight"}, ctx,
                     kCfg);
  detail::read_if(j, "base_url", ep.base_url);
  detail::read_if(j, "timeout_ms", ep.timeout_ms);
  detail::read_if(j, "max_retries", ep.max_retries);
  detail::read_if(j, "max_in_flight", ep.max_in_flight);
}

json endpoint_json(const ServiceEndpoint& ep) {
  return json{{"base_url", ep.base_url},
              {"timeout_ms", ep.timeout_ms},
              {"max_retries", ep.max_retries},
              {"max_in_flight", ep.max_in_flight}};
}

template <class T>
json optional_path(const std::optional<T>& p) {
  return p ? json(p->string()) : json(nullptr);
}

void read_path(const json& j, const char* key, std::optional<std::filesystem::path>& out) {
  if (auto it = j.find(key); it != j.end()) {
    if (it->is_null()) {
      out.reset();
    } else {
      out = it->get<std::string>();
    }
  }
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  RunConfig cfg;
  try {
    detail::check_keys(j, {"selector", "tracker", "backend", "detector", "vlm", "mock", "seed",
                           "keywords", "prompts"},
                       "config", kCfg);
    if (auto it = j.find("selector"); it != j.end()) {
      detail::check_keys(*it, {"tau", "delta_t", "top_m", "lambda_b", "lambda_c", "lambda_p",
                               "spatial_penalty"},
                         "config.selector", kCfg);
      auto& s = cfg.selector;
      detail::read_if(*it, "tau", s.tau);
      detail::read_if(*it, "delta_t", s.delta_t);
      detail::read_if(*it, "top_m", s.top_m);
      detail::read_if(*it, "lambda_b", s.lambda_b);
      detail::read_if(*it, "lambda_c", s.lambda_c);
      detail::read_if(*it, "lambda_p", s.lambda_p);
      detail::read_if(*it, "spatial_penalty", s.spatial_penalty);
    }
    if (auto it = j.find("tracker"); it != j.end()) {
      detail::check_keys(*it, {"template_size", "padding", "kernel_sigma",
                               "target_sigma_factor", "ridge_lambda", "interp_factor",
                               "psr_occlusion_threshold"},
                         "config.tracker", kCfg);
      auto& t = cfg.tracker;
      detail::read_if(*it, "template_size", t.template_size);
      detail::read_if(*it, "padding", t.padding);
      detail::read_if(*it, "kernel_sigma", t.kernel_sigma);
      detail::read_if(*it, "target_sigma_factor", t.target_sigma_factor);
      detail::read_if(*it, "ridge_lambda", t.ridge_lambda);
      detail::read_if(*it, "interp_factor", t.interp_factor);
      detail::read_if(*it, "psr_occlusion_threshold", t.psr_occlusion_threshold);
    }
    if (auto it = j.find("backend"); it != j.end()) {
      const auto b = it->get<std::string>();
      if (b == "mock") cfg.backend = Backend::kMock;
      else if (b == "remote") cfg.backend = Backend::kRemote;
      else throw Error(kCfg, "config.backend must be 'mock' or 'remote'");
    }
    if (auto it = j.find("detector"); it != j.end()) read_endpoint(*it, cfg.detector, "config.detector");
    if (auto it = j.find("vlm"); it != j.end()) read_endpoint(*it, cfg.vlm, "config.vlm");
    if (auto it = j.find("mock"); it != j.end()) {
      detail::check_keys(*it, {"truth", "jitter_sigma", "score_noise", "visibility_threshold"},
                         "config.mock", kCfg);
      read_path(*it, "truth", cfg.mock_truth);
      detail::read_if(*it, "jitter_sigma", cfg.mock_detector.jitter_sigma);
      detail::read_if(*it, "score_noise", cfg.mock_detector.score_noise);
      detail::read_if(*it, "visibility_threshold", cfg.mock_detector.visibility_threshold);
    }
    detail::read_if(j, "seed", cfg.seed);
    cfg.mock_detector.seed = cfg.seed;
    read_path(j, "keywords", cfg.keywords);
    read_path(j, "prompts", cfg.prompts);
  } catch (const nlohmann::json::exception& e) {
    throw Error(kCfg, std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  try {
    return parse_run_config(json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(kCfg, path.string() + ": " + e.what());
  }
}

json to_json(const RunConfig& cfg) {
  const auto& s = cfg.selector;
  const auto& t = cfg.tracker;
  return json{
      {"selector",
       {{"tau", s.tau},
        {"delta_t", s.delta_t},
        {"top_m", s.top_m},
        {"lambda_b", s.lambda_b},
        {"lambda_c", s.lambda_c},
        {"lambda_p", s.lambda_p},
        {"spatial_penalty", s.spatial_penalty}}},
      {"tracker",
       {{"template_size", t.template_size},
        {"padding", t.padding},
        {"kernel_sigma", t.kernel_sigma},
        {"target_sigma_factor", t.target_sigma_factor},
        {"ridge_lambda", t.ridge_lambda},
        {"interp_factor", t.interp_factor},
        {"psr_occlusion_threshold", t.psr_occlusion_threshold}}},
      {"backend", cfg.backend == Backend::kMock ? "mock" : "remote"},
      {"detector", endpoint_json(cfg.detector)},
      {"vlm", endpoint_json(cfg.vlm)},
      {"mock",
       {{"truth", optional_path(cfg.mock_truth)},
        {"jitter_sigma", cfg.mock_detector.jitter_sigma},
        {"score_noise", cfg.mock_detector.score_noise},
        {"visibility_threshold", cfg.mock_detector.visibility_threshold}}},
      {"seed", cfg.seed},
      {"keywords", optional_path(cfg.keywords)},
      {"prompts", optional_path(cfg.prompts)}};
}

}  // namespace anchorframe
