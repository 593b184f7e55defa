#pragma once

#include <string>

#include "dpges/core.hpp"

namespace dpges {

using ColorImageF = ColorImageT<float>;
using ScalarImageF = ScalarImageT<float>;

// Binary PPM (P6, maxval 255). Loading maps byte k to k/255; saving clamps to
// [0,1] and rounds, so 8-bit data round-trips bit-exactly.
ColorImageF load_ppm(const std::string& path);
void save_ppm(const std::string& path, const ColorImageF& img);

// PFM, little-endian (negative scale); "PF" color or "Pf" grayscale.
ColorImageF load_pfm(const std::string& path);
void save_pfm(const std::string& path, const ColorImageF& img);
void save_pfm(const std::string& path, const ScalarImageF& img);

// Dispatches on extension (.ppm/.pfm).
ColorImageF load_image(const std::string& path);
void save_image(const std::string& path, const ColorImageF& img);

}  // namespace dpges
