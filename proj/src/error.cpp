// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

#include "chunkmem/error.hpp"

namespace chunkmem {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kEmptyInput: return "empty input";
    case ErrorKind::kNonFinite: return "non-finite value";
    case ErrorKind::kInvalidConfig: return "invalid config";
    case ErrorKind::kBounds: return "index out of bounds";
    case ErrorKind::kCapacity: return "capacity violation";
    case ErrorKind::kAlreadySet: return "already set";
    case ErrorKind::kEmptyMemory: return "empty memory";
    case ErrorKind::kUnknownTopic: return "unknown topic";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kSchema: return "schema error";
    case ErrorKind::kInapplicableMetric: return "inapplicable metric";
  }
  return "error";
}

}  // namespace chunkmem
