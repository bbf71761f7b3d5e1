#pragma once

#include <mutex>

namespace kacgame::detail {

// FFTW planning is not thread-safe; execution with the new-array interface is.
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

} // namespace kacgame::detail
