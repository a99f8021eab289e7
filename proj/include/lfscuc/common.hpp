#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lfscuc {

/// Input data failed structural or range validation. CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical procedure failed (eigensolver, unstable integration,
/// degenerate mode structure). Distinct from bad input. CLI exit code 2.
class NumericsError : public std::runtime_error {
 public:
  explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

/// The optimization model was proven infeasible or unbounded. CLI exit code 3.
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

/// The solver backend is unavailable or violated its protocol. CLI exit code 4.
class BackendError : public std::runtime_error {
 public:
  explicit BackendError(const std::string& what) : std::runtime_error(what) {}
};

/// FNV-1a 64-bit content hash, used to fingerprint input files in run manifests.
std::uint64_t fnv1a64(const std::string& bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace lfscuc
