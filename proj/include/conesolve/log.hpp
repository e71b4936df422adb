#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <utility>

namespace conesolve {

using WarningSink = std::function<void(const std::string&)>;

namespace detail {
struct WarningState {
  std::mutex mutex;
  WarningSink sink = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
};

inline WarningState& warning_state() {
  static WarningState state;
  return state;
}
}  // namespace detail

/// Replaces the warning sink and returns the previous one.
inline WarningSink set_warning_sink(WarningSink sink) {
  auto& st = detail::warning_state();
  std::lock_guard lock(st.mutex);
  return std::exchange(st.sink, std::move(sink));
}

inline void warn(const std::string& message) {
  auto& st = detail::warning_state();
  std::lock_guard lock(st.mutex);
  if (st.sink) st.sink(message);
}

}  // namespace conesolve
