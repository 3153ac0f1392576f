// Copyright 2026  The dfwhisper Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dfw/common/rng.h"
#include "dfw/features/feature_map.h"
#include "dfw/nn/module.h"

namespace dfw::models {

enum class Arch { kLcnn, kSpecRNet, kMesoNet };

std::string_view arch_name(Arch arch);
bool parse_arch(std::string_view text, Arch* out);

/// Parameter counts of the three detectors at their reference geometry.
inline constexpr int64_t kLcnnParams = 467425;         // 80 feature rows
inline constexpr int64_t kLcnnWideParams = 7248449;    // 384 feature rows
inline constexpr int64_t kSpecRNetParams = 277963;
inline constexpr int64_t kMesoNetParams = 28486;

struct ModelSpec {
  Arch arch = Arch::kMesoNet;
  int64_t input_dim = 384;
  /// When set, build_model verifies the count and raises BadConfig otherwise.
  std::optional<int64_t> expected_params;
  /// Output length of the adaptive 1-D pooling in front of MesoNet's fc1.
  int64_t meso_pool = 1024;
  /// LCNN dropout before the recurrent stack; MesoNet dropout before each
  /// fully connected layer. Active in training mode only.
  double lcnn_dropout = 0.7;
  double meso_dropout = 0.5;

  void validate() const;
};

/// Common interface: features (B, input_dim, T) -> logits (B); score =
/// sigmoid(logit) = probability of the spoof class.
class Detector : public nn::Module {
 public:
  explicit Detector(ModelSpec spec) : spec_(spec) {}
  const ModelSpec& spec() const { return spec_; }

  nn::Tensor logits(const nn::Tensor& x);
  nn::Tensor scores(const nn::Tensor& x);
  /// Smallest time extent the architecture's pooling accepts.
  virtual int64_t min_frames() const = 0;
  /// Reseeds the dropout stream (training reproducibility).
  void seed_dropout(uint64_t seed) { dropout_rng_ = Rng(seed); }

 protected:
  virtual nn::Tensor forward_impl(const nn::Tensor& x) = 0;
  Rng dropout_rng_{0};

 private:
  ModelSpec spec_;
};

/// Weights follow the PyTorch layer defaults drawn from a stream derived
/// from `seed`; the model starts in training mode.
std::shared_ptr<Detector> build_lcnn(int64_t input_dim, uint64_t seed = 0);
std::shared_ptr<Detector> build_specrnet(int64_t input_dim, uint64_t seed = 0);
std::shared_ptr<Detector> build_mesonet(int64_t input_dim, uint64_t seed = 0);
std::shared_ptr<Detector> build_model(const ModelSpec& spec, uint64_t seed = 0);

/// Trainable parameter elements of the detector alone.
int64_t count_params(const Detector& model);

struct ScoreBatch {
  std::vector<std::string> utt_ids;
  std::vector<double> scores;
};

/// Stacks the maps (equal shapes, rows == input_dim) into one batch.
nn::Tensor stack_features(const std::vector<features::FeatureMap>& batch);
ScoreBatch forward(Detector& model, const std::vector<features::FeatureMap>& batch);

// ---- checkpoints ------------------------------------------------------------

struct CheckpointMeta {
  std::string arch;
  int64_t input_dim = 0;
  std::string frontend_tag;
  std::string config_hash;
  int64_t epoch = 0;
  double val_acc = 0.0;
  uint64_t seed = 0;
  int64_t meso_pool = 1024;
};

using TensorMap = std::map<std::string, nn::Tensor>;

/// Binary container: magic, JSON header (metadata + tensor index), raw
/// float64 payload. Detector tensors are stored under "model.", an attached
/// trainable encoder under "encoder.". Written atomically.
void save_checkpoint(const std::string& path, const Detector& model, const CheckpointMeta& meta,
                     const nn::Module* encoder = nullptr);

struct Checkpoint {
  CheckpointMeta meta;
  std::shared_ptr<Detector> model;
  /// Encoder tensors (names without prefix); empty when none was stored.
  TensorMap encoder_state;
};

/// IncompatibleCheckpoint on a bad container, unknown architecture, or a
/// tensor whose name or shape does not match the rebuilt model. The model is
/// returned in evaluation mode.
Checkpoint load_checkpoint(const std::string& path);
/// Copies `state` into the module's tensors; every module tensor must exist.
void load_state(nn::Module& module, const TensorMap& state, const std::string& what);

}  // namespace dfw::models
