// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. `run` is the whole program minus process exit so
// tests can drive it in-process.

#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "ahems/embedding.h"
#include "ahems/error.h"

namespace ahems::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitUsage = 2,
  kExitValidation = 3,
  kExitBudget = 4,
  kExitKeyMismatch = 5,
  kExitIo = 6,
  kExitMissingKey = 7,
  kExitIntegrity = 8,
};

int exit_code(ErrorKind kind);

// "4" -> 4 equal blocks with default labels; "rhythm,melody" -> equal blocks
// with those labels; "rhythm:32,melody:96" -> explicit lengths.
BlockSchema parse_blocks(const std::string& spec, std::size_t dimension);

// "1,0,0.5,0"
WeightVector parse_weights(const std::string& spec);

std::vector<std::size_t> parse_dims(const std::string& spec);

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ahems::cli
