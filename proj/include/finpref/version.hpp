// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace finpref {

inline constexpr const char* kVersionString = "0.1.0";

}  // namespace finpref
