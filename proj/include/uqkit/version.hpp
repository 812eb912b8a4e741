#ifndef UQKIT_VERSION_HPP_
#define UQKIT_VERSION_HPP_

namespace uqkit {

inline constexpr const char *kVersion = "0.1.0";

}  // namespace uqkit

#endif  // UQKIT_VERSION_HPP_
