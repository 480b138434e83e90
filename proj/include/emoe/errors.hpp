// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace emoe {

// Shape or index-space disagreement between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Mathematical domain violation (log of non-positive, NaN/Inf, unnormalized
// distributions, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Bad user-supplied configuration or argument value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace emoe
