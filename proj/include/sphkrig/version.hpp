#ifndef SPHKRIG_VERSION_HPP
#define SPHKRIG_VERSION_HPP

namespace sphkrig {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kCheckpointMagic = "sphkrig-checkpoint";
inline constexpr int kCheckpointVersion = 1;

}  // namespace sphkrig

#endif
