/* VERSION.HPP
 * Copyright (C) 2026 liveptycho contributors
 * Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
 */
#pragma once

namespace ptycho {
inline constexpr const char* kVersion = "0.1.0";
}
