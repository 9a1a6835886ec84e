#pragma once

namespace bucketops {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace bucketops
