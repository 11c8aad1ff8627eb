// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

namespace cose {

/// 1-D normalized Gaussian taps of radius ceil(3 sigma); sigma <= 0 yields {1}.
std::vector<double> gaussian_taps(double sigma);

}  // namespace cose
