#pragma once

#include <stdexcept>
#include <string>

namespace bsps {

// Numerical failures (CLI exit code 3).
struct NotPositiveDefinite : std::runtime_error {
  explicit NotPositiveDefinite(const std::string& msg) : std::runtime_error(msg) {}
};
struct RankDeficient : std::runtime_error {
  explicit RankDeficient(const std::string& msg) : std::runtime_error(msg) {}
};
struct SamplerStall : std::runtime_error {
  explicit SamplerStall(const std::string& msg) : std::runtime_error(msg) {}
};

// Data/usage failures (CLI exit code 2).
struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};
struct KindMismatch : std::runtime_error {
  explicit KindMismatch(const std::string& msg) : std::runtime_error(msg) {}
};
struct LengthMismatch : std::runtime_error {
  explicit LengthMismatch(const std::string& msg) : std::runtime_error(msg) {}
};
struct SingleClass : std::runtime_error {
  explicit SingleClass(const std::string& msg) : std::runtime_error(msg) {}
};
struct EmptyData : std::runtime_error {
  explicit EmptyData(const std::string& msg) : std::runtime_error(msg) {}
};
struct DuplicateSites : std::runtime_error {
  explicit DuplicateSites(const std::string& msg) : std::runtime_error(msg) {}
};
struct ArtifactMismatch : std::runtime_error {
  explicit ArtifactMismatch(const std::string& msg) : std::runtime_error(msg) {}
};
struct UnknownExperiment : std::runtime_error {
  explicit UnknownExperiment(const std::string& msg) : std::runtime_error(msg) {}
};
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bsps
