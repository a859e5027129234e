#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <string_view>

namespace replay_bench::log {

enum class Level { debug = 0, info = 1, warning = 2, error = 3, silent = 4 };

inline std::atomic<Level>& threshold() {
    static std::atomic<Level> level{Level::info};
    return level;
}

inline void set_level(Level level) { threshold().store(level); }

inline void write(Level level, std::string_view message) {
    if (level < threshold().load()) return;
    static std::mutex mutex;
    static constexpr std::string_view tags[] = {"debug", "info", "warning", "error"};
    std::lock_guard lock(mutex);
    std::clog << "[" << tags[static_cast<int>(level)] << "] " << message << '\n';
}

inline void debug(std::string_view m) { write(Level::debug, m); }
inline void info(std::string_view m) { write(Level::info, m); }
inline void warning(std::string_view m) { write(Level::warning, m); }
inline void error(std::string_view m) { write(Level::error, m); }

}  // namespace replay_bench::log
