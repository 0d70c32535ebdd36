#pragma once

namespace aps {

inline constexpr const char* kVersion = "1.0.0";

// Format tags embedded in every serialized artifact.
inline constexpr int kDatasetFormatVersion = 1;
inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr int kReportFormatVersion = 1;
inline constexpr int kManifestFormatVersion = 1;

}  // namespace aps
