// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <exception>

#ifdef EXITCTL_HAVE_OPENMP
#include <omp.h>
#endif

namespace exitctl {

/// Runs body(i) for i in [0, n).  workers <= 1 runs the plain serial loop
/// (the reference implementation); otherwise iterations are distributed
/// over OpenMP threads.  Bodies must write only to disjoint state per i so
/// results never depend on the schedule.  Exceptions are captured and the
/// one from the lowest index is rethrown after the join, so error identity
/// is deterministic too.
template <class F>
void parallel_for(long n, [[maybe_unused]] int workers, F&& body) {
#ifdef EXITCTL_HAVE_OPENMP
    if (workers > 1 && n > 1) {
        std::exception_ptr err = nullptr;
        long err_index = -1;
#pragma omp parallel for schedule(static) num_threads(workers)
        for (long i = 0; i < n; ++i) {
            try {
                body(i);
            } catch (...) {
#pragma omp critical(exitctl_parallel_for_err)
                {
                    if (err_index < 0 || i < err_index) {
                        err_index = i;
                        err = std::current_exception();
                    }
                }
            }
        }
        if (err) std::rethrow_exception(err);
        return;
    }
#endif
    for (long i = 0; i < n; ++i) body(i);
}

inline int default_workers() {
#ifdef EXITCTL_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace exitctl
