// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace faastube {

// Sizes are decimal: 1 MB = 1e6 bytes, 1 GB = 1e9 bytes. Rates are GB/s and
// simulated time is milliseconds, so one GB/s moves exactly 1e6 bytes per ms.
inline constexpr double kMB = 1e6;
inline constexpr double kGB = 1e9;
inline constexpr double kBytesPerMsPerGbps = 1e6;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Milliseconds needed to move `bytes` at `gbps`.
inline double transfer_ms(double bytes, double gbps) {
  if (bytes <= 0.0) return 0.0;
  return bytes / (gbps * kBytesPerMsPerGbps);
}

using GpuId = int;
using NodeId = int;
using OwnerId = std::uint64_t;
using DataId = std::uint64_t;

/// Base for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

class WorkflowError : public Error {
 public:
  using Error::Error;
};

class SchedulingError : public Error {
 public:
  using Error::Error;
};

class InfeasibleRate : public SchedulingError {
 public:
  using SchedulingError::SchedulingError;
};

class MemoryError : public Error {
 public:
  using Error::Error;
};

class MissingData : public Error {
 public:
  using Error::Error;
};

}  // namespace faastube
