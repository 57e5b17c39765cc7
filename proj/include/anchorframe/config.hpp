#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "anchorframe/clients.hpp"
#include "anchorframe/kcf.hpp"
#include "anchorframe/scoring.hpp"

namespace anchorframe {

enum class Backend { kMock, kRemote };

/// Everything a selection run needs. Defaults reproduce the reference
/// settings (tau 0.05, delta_t 5, M 5, lambdas 0.5/0.3/0.2).
struct RunConfig {
  SelectorConfig selector;
  TrackerConfig tracker;
  Backend backend = Backend::kMock;
  ServiceEndpoint detector{"http://127.0.0.1:8601"};
  ServiceEndpoint vlm{"http://127.0.0.1:8602"};
  /// Ground-truth sidecar for the mocks; defaults to <frames>/truth.json.
  std::optional<std::filesystem::path> mock_truth;
  MockDetectorConfig mock_detector;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> keywords;
  std::optional<std::filesystem::path> prompts;

  void validate() const;
  /// Backend after applying ANCHORFRAME_OFFLINE.
  Backend effective_backend() const;
};

/// Overlays `j` onto the defaults. Unknown keys raise kConfig.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace anchorframe
