#pragma once

namespace twz {

// Execution policy for the data-parallel kernels. Results are required to be
// bitwise identical across policies: every kernel stores per-item results and
// reduces them in a fixed index order.
enum class Execution { serial, parallel };

} // namespace twz
