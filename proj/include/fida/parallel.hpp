#pragma once

#include <functional>

namespace fida {

// Global worker cap shared by all parallel loops (CLI --threads).
int max_threads();
void set_max_threads(int n);

// Runs body(i) for i in [0, n). Bodies must be independent; results are
// identical for any thread count. The first exception thrown is rethrown.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace fida
