// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace boolgan {

constexpr double kGradcheckTolerance = 1e-4;

struct GradcheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradcheckOptions {
  /// "all" or one entry of gradcheck_scopes().
  std::string scope = "all";
  /// Test fixture: corrupt the named kind's backward (only "conv2d" supported).
  std::string inject_fault;
  double tolerance = kGradcheckTolerance;
};

/// conv2d, convtranspose2d, batchnorm2d, dropout, relu, leaky_relu, tanh,
/// sigmoid, dcgan_generator, boolgan_generator, discriminator, critic.
const std::vector<std::string_view>& gradcheck_scopes();

/// 64-bit central differences against every hand-written backward pass.
/// Full networks are checked on a seeded sample of entries per tensor.
std::vector<GradcheckEntry> run_gradcheck(const GradcheckOptions& options = {});

}  // namespace boolgan
