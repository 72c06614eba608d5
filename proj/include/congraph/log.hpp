#pragma once

#include <cstdio>

#include <fmt/core.h>

namespace congraph::logging {

template <class... Args>
void info(fmt::format_string<Args...> f, Args&&... args) {
  fmt::print(stderr, "[info] {}\n", fmt::format(f, std::forward<Args>(args)...));
}

template <class... Args>
void warn(fmt::format_string<Args...> f, Args&&... args) {
  fmt::print(stderr, "[warn] {}\n", fmt::format(f, std::forward<Args>(args)...));
}

}  // namespace congraph::logging
