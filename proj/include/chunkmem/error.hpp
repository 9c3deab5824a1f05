// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace chunkmem {

enum class ErrorKind {
  kShape,
  kEmptyInput,
  kNonFinite,
  kInvalidConfig,
  kBounds,
  kCapacity,
  kAlreadySet,
  kEmptyMemory,
  kUnknownTopic,
  kParse,
  kSchema,
  kInapplicableMetric,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace chunkmem
