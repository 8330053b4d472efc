#include "lcsbench/execution.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lcsbench {

void setWorkerCount(int workers) {
#ifdef _OPENMP
    if (workers > 0) omp_set_num_threads(workers);
#else
    (void)workers;
#endif
}

int workerCount() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace lcsbench
