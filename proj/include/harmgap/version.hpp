#ifndef HARMGAP_VERSION_HPP
#define HARMGAP_VERSION_HPP

namespace harmgap {

inline constexpr const char* kToolName = "harmgap";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace harmgap

#endif  // HARMGAP_VERSION_HPP
