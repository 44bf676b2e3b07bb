#pragma once

namespace photonfilter {

inline constexpr const char* project_name = "photon-filter-sim";
inline constexpr const char* version = "0.1.0";

}  // namespace photonfilter
