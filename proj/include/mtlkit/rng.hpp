// Copyright 2026 The mtlkit Authors.
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

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace mtl {

using Rng = std::mt19937_64;

/// Independent generator for a (seed, stream ids...) tuple, so work split
/// by task or by purpose draws the same numbers regardless of call order.
inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * ids.size());
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (auto id : ids) push(id);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

// Stream purposes.
inline constexpr std::uint64_t kStreamGlobal = 0x676c6f62;
inline constexpr std::uint64_t kStreamTask = 0x7461736b;
inline constexpr std::uint64_t kStreamSplit = 0x73706c74;
inline constexpr std::uint64_t kStreamInit = 0x696e6974;
inline constexpr std::uint64_t kStreamSampler = 0x73616d70;
inline constexpr std::uint64_t kStreamBatch = 0x62617463;

}  // namespace mtl
