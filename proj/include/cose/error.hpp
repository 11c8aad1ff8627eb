// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cose {

enum class Errc {
  kShapeMismatch,
  kInvalidGraph,
  kBackwardBeforeForward,
  kTrainingDiverged,
  kInvalidArgument,
  kUnsupportedMethod,
  kSingularRegression,
  kNoOverlap,
  kUndefinedMetric,
  kUndefinedCorrelation,
  kBadMagic,
  kUnsupportedVersion,
  kTruncated,
  kDuplicateName,
  kInvalidContainer,
  kMissingPredictions,
  kConfig,
  kIo,
};

std::string_view errc_name(Errc code) noexcept;

// Every failure surfaced by the engine carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace cose
