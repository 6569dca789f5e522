#pragma once

#include <stdexcept>
#include <string>

namespace gsm {

// Base class for all toolkit failures. Each concrete type carries a stable
// code() used by the CLI when emitting machine-readable error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

// Correlation matrix not positive definite even after nugget escalation.
struct SingularSystem : Error {
  explicit SingularSystem(const std::string& w) : Error("SingularSystem", w) {}
};

// F^T R^-1 F singular (e.g. fewer samples than regression functions).
struct RankDeficientRegression : Error {
  explicit RankDeficientRegression(const std::string& w)
      : Error("RankDeficientRegression", w) {}
};

// A transformed preimage left the extended validity region.
struct DomainEscape : Error {
  explicit DomainEscape(const std::string& w) : Error("DomainEscape", w) {}
};

// Damped Gauss-Newton exhausted its damping without any objective decrease.
struct NoDescent : Error {
  explicit NoDescent(const std::string& w) : Error("NoDescent", w) {}
};

// Covariance spectrum unusable (all eigenvalues <= 0, or the requested
// energy threshold is unreachable with the numerically nonzero modes).
struct DegenerateSpectrum : Error {
  explicit DegenerateSpectrum(const std::string& w)
      : Error("DegenerateSpectrum", w) {}
};

// Gappy design matrix rank-deficient (n < l or numerical rank < l).
struct RankDeficient : Error {
  explicit RankDeficient(const std::string& w) : Error("RankDeficient", w) {}
};

// Trend column of a hierarchical model is identically zero.
struct ZeroTrend : Error {
  explicit ZeroTrend(const std::string& w) : Error("ZeroTrend", w) {}
};

// Validation oracle is constant over the grid (zero standard deviation).
struct DegenerateValidation : Error {
  explicit DegenerateValidation(const std::string& w)
      : Error("DegenerateValidation", w) {}
};

// Every multistart point of the hyperparameter fit failed.
struct AllStartsFailed : Error {
  explicit AllStartsFailed(const std::string& w)
      : Error("AllStartsFailed", w) {}
};

// An artifact file was produced from different inputs than the ones on disk.
struct StaleArtifact : Error {
  explicit StaleArtifact(const std::string& w) : Error("StaleArtifact", w) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("ConfigError", w) {}
};

}  // namespace gsm
