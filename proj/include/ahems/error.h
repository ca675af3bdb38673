// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace ahems {

// Error classes. Each maps to a distinct CLI exit code (see tools/ahems.cpp).
enum class ErrorKind {
  kUsage,
  kValidation,
  kBudget,
  kKeyMismatch,
  kMissingKey,
  kIo,
  kIntegrity,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error UsageError(const std::string& msg) {
  return Error(ErrorKind::kUsage, msg);
}
inline Error ValidationError(const std::string& msg) {
  return Error(ErrorKind::kValidation, msg);
}
inline Error BudgetError(const std::string& msg) {
  return Error(ErrorKind::kBudget, msg);
}
inline Error KeyMismatchError(const std::string& msg) {
  return Error(ErrorKind::kKeyMismatch, msg);
}
inline Error MissingKeyError(const std::string& msg) {
  return Error(ErrorKind::kMissingKey, msg);
}
inline Error IoError(const std::string& msg) {
  return Error(ErrorKind::kIo, msg);
}
inline Error IntegrityError(const std::string& msg) {
  return Error(ErrorKind::kIntegrity, msg);
}

}  // namespace ahems
