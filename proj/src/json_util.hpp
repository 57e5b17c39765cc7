#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "anchorframe/error.hpp"

namespace anchorframe::detail {

/// Rejects any key of `j` outside `allowed`.
inline void check_keys(const nlohmann::json& j,
                       std::initializer_list<std::string_view> allowed,
                       std::string_view context, ErrorCode code) {
  if (!j.is_object()) {
    throw Error(code, std::string(context) + ": expected a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) {
      throw Error(code, std::string(context) + ": unknown key '" + key + "'");
    }
  }
}

template <class T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) it->get_to(out);
}

}  // namespace anchorframe::detail
