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

#include <functional>
#include <string>
#include <vector>

#include "dfw/audio/audio.h"
#include "dfw/common/types.h"
#include "dfw/features/feature_map.h"
#include "dfw/models/detector.h"
#include "dfw/whisper/frontend.h"

namespace dfw::saliency {

/// What is differentiated: BCE of the logit against the target label
/// (default), or the raw spoof logit.
enum class Objective { kLoss, kLogit };

/// Raw input gradient with the shape of the probed input: (rows, frames)
/// for feature maps, (samples) for waveforms.
struct SaliencyMap {
  nn::Tensor values;
  std::string model_tag;
  std::string frontend_tag;
  Label target = Label::kBonafide;
  Objective objective = Objective::kLoss;

  /// |values|, the quantity that is rendered.
  std::vector<double> magnitude() const;
};

/// Maps one (1, rows, frames) input to a (1) logit.
using LogitFn = std::function<nn::Tensor(const nn::Tensor&)>;

/// Gradient w.r.t. a (rows, frames) feature map. Puts the model in eval
/// mode. ShapeMismatch when the map does not fit the model input.
SaliencyMap feature_gradient(models::Detector& model, const features::FeatureMap& map, Label target,
                             Objective objective = Objective::kLoss);
SaliencyMap feature_gradient(const LogitFn& fn, const nn::Tensor& map, Label target,
                             Objective objective = Objective::kLoss);

/// Gradient w.r.t. every sample of a preprocessed clip, through the front-end
/// and the model. NonDifferentiableFrontend when the gradient is not finite.
SaliencyMap waveform_gradient(models::Detector& model, const whisper::Frontend& frontend,
                              const audio::AudioClip& clip, Label target,
                              Objective objective = Objective::kLoss);

/// Heatmap of |gradient| for 2-D maps: frames on x, feature index on y
/// (row 0 at the bottom), per-map max-abs normalisation, fixed colormap.
void render_heatmap(const SaliencyMap& map, const std::string& path);
/// |gradient| envelope over the sample index for 1-D maps.
void render_trace(const SaliencyMap& map, const std::string& path);

/// "DFWSAL1\n", one JSON header line (shape, tags, target, objective), then
/// the values as little-endian float32 in row-major order.
void write_raw(const SaliencyMap& map, const std::string& path);
SaliencyMap read_raw(const std::string& path);

}  // namespace dfw::saliency
