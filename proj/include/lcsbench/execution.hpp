#pragma once

namespace lcsbench {

/// Selects between the OpenMP kernel and its serial reference. Both paths
/// produce bit-identical results for identical inputs.
enum class Execution { Serial, Parallel };

/// Sets the OpenMP worker count (no-op without OpenMP). 0 keeps the default.
void setWorkerCount(int workers);
int workerCount();

}  // namespace lcsbench
