// Copyright 2026 The Cribtag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cribtag/log.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace cribtag {

namespace {
std::mutex g_mu;
WarningSink g_sink;
bool g_verbose = false;
}  // namespace

void warn(std::string_view message) {
  std::lock_guard lock(g_mu);
  if (g_sink) {
    g_sink(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

WarningSink set_warning_sink(WarningSink sink) {
  std::lock_guard lock(g_mu);
  return std::exchange(g_sink, std::move(sink));
}

void info(std::string_view message) {
  std::lock_guard lock(g_mu);
  if (g_verbose) std::cerr << message << '\n';
}

void set_verbose(bool on) {
  std::lock_guard lock(g_mu);
  g_verbose = on;
}

}  // namespace cribtag
