#pragma once

#include <cmath>
#include <vector>

#include "ooc/util/errors.hpp"

namespace ooc::diff {

// Continuous-coordinate token encoding used for waypoint conditioning. Each
// coordinate becomes 21 numbers: the raw value followed by sin/cos pairs at
// ten geometrically spaced frequencies. Coordinates arrive in grid units
// (cells), so the base frequency covers one cell and the highest resolves
// fractions of it.
constexpr int kCoordEncDims = 21;
constexpr int kWaypointCoords = 4;
constexpr int kWaypointTokenDims = kCoordEncDims * kWaypointCoords;  // 84

inline void encode_coordinate(float v, float* out) {
    out[0] = v;
    double freq = 0.125;
    for (int i = 0; i < 10; ++i) {
        out[1 + 2 * i] = static_cast<float>(std::sin(freq * v));
        out[2 + 2 * i] = static_cast<float>(std::cos(freq * v));
        freq *= 2.0;
    }
}

// k waypoints of 4 coordinates each -> k tokens of 84 dims, token-major
// (token j occupies out[j*84 .. j*84+83]), the per-record layout the training
// set stores.
inline std::vector<float> waypoint_tokens(const float* waypoints, int k) {
    if (k <= 0) throw ContractError("waypoint_tokens: need at least one waypoint");
    std::vector<float> out(static_cast<std::size_t>(k) * kWaypointTokenDims);
    for (int j = 0; j < k; ++j)
        for (int c = 0; c < kWaypointCoords; ++c)
            encode_coordinate(waypoints[j * kWaypointCoords + c],
                              out.data() + static_cast<std::size_t>(j) * kWaypointTokenDims +
                                  static_cast<std::size_t>(c) * kCoordEncDims);
    return out;
}

// Transpose per-record token-major layout into the (cond_dim, n) image a
// single-sample denoiser call reads.
inline std::vector<float> tokens_to_model_layout(const std::vector<float>& tok, int n,
                                                 int cond_dim) {
    if (static_cast<int>(tok.size()) != n * cond_dim)
        throw ContractError("tokens_to_model_layout: size mismatch");
    std::vector<float> out(tok.size());
    for (int j = 0; j < n; ++j)
        for (int e = 0; e < cond_dim; ++e)
            out[static_cast<std::size_t>(e) * n + j] = tok[static_cast<std::size_t>(j) * cond_dim + e];
    return out;
}

}  // namespace ooc::diff
