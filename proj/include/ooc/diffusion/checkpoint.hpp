#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ooc/data/normalizer.hpp"
#include "ooc/diffusion/denoiser.hpp"
#include "ooc/diffusion/schedule.hpp"

namespace ooc::diff {

// A checkpoint is a pair of files: <stem>.json holds everything needed to
// rebuild the model (architecture, noise schedule, normalization ranges,
// named parameter layout, crc32 of the blob) and <stem>.bin is the raw
// little-endian f32 weight vector in registration order.
void save_checkpoint(const std::string& stem, const DenoiserConfig& arch,
                     const NoiseSchedule& sched, const data::Normalizer& norm, int d_state,
                     const std::vector<float>& weights, const nlohmann::json& train_info);

struct LoadedModel {
    std::unique_ptr<Denoiser<float>> model;
    NoiseSchedule sched;
    data::Normalizer norm;
    int d_state = 0;
    nlohmann::json train_info;
};

// Rebuilds the denoiser from <stem>.json + <stem>.bin. Throws LoadError on
// missing files, layout mismatches, or a crc32 that does not match the blob.
LoadedModel load_checkpoint(const std::string& stem);

}  // namespace ooc::diff
