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
#include <string>
#include <vector>

#include "mtlkit/autograd.hpp"
#include "mtlkit/datagen.hpp"
#include "mtlkit/rng.hpp"
#include "mtlkit/tensor.hpp"

namespace mtl {

struct BackboneConfig {
  int layers = 2;
  int hidden = 64;
  int heads = 4;
  int ff = 128;
  int vocab = 512;
  int max_len = 64;
  int d_img = 16;
  int max_images = 4;

  void validate() const;
  /// Stable one-line description; checkpoints compare it on load.
  std::string describe() const;
  bool operator==(const BackboneConfig&) const = default;

  std::size_t start_id() const { return static_cast<std::size_t>(vocab); }
  std::size_t sep_id() const { return static_cast<std::size_t>(vocab) + 1; }
  std::size_t pad_id() const { return static_cast<std::size_t>(vocab) + 2; }
};

/// Embedded single-stream input: [START] text [SEP] images [SEP] [PAD]...
/// The trailing [SEP] is present only when the example has images.
struct InputSequence {
  Var embeddings;
  std::vector<int> token_types;  // 0 = text side, 1 = image side
  std::vector<int> positions;
  std::vector<std::uint8_t> mask;  // 1 = real token, 0 = padding
  std::size_t text_count = 0;
  std::size_t image_count = 0;

  std::size_t length() const noexcept { return mask.size(); }
};

/// Shared pre-norm transformer encoder plus its input embeddings. All
/// parameters are registered under "embed/" and "backbone/".
class Backbone {
 public:
  Backbone(ParamStore& store, const BackboneConfig& cfg, Rng& rng);

  /// Builds the embedded sequence for one example. Images beyond max_images
  /// are dropped, then text is cut from the right to fit max_len. When
  /// pad_to exceeds the sequence length the tail is filled with masked PAD.
  InputSequence assemble(Graph& g, const Example& example, std::size_t pad_to = 0) const;

  /// Runs the encoder layers. If `ln_outputs` is given, the normalized
  /// (pre-affine) activations of every layer norm are appended to it.
  Var encode(Graph& g, const InputSequence& seq, std::vector<Tensor>* ln_outputs = nullptr) const;

  /// Toggles training of the transformer layers. Embedding tables follow
  /// only when `include_embeddings` is set; the image projection never does.
  void set_frozen(bool frozen, bool include_embeddings = false);

  const BackboneConfig& config() const noexcept { return cfg_; }

 private:
  struct Layer {
    Parameter *ln1_g, *ln1_b;
    Parameter *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
    Parameter *ln2_g, *ln2_b;
    Parameter *ff1_w, *ff1_b, *ff2_w, *ff2_b;
  };

  BackboneConfig cfg_;
  Parameter* token_table_ = nullptr;
  Parameter* type_table_ = nullptr;
  Parameter* position_table_ = nullptr;
  Parameter* image_w_ = nullptr;
  Parameter* image_b_ = nullptr;
  std::vector<Layer> layers_;
};

}  // namespace mtl
