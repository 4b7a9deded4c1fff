#include "ivs/log.hpp"

#include <cstdio>
#include <mutex>

namespace ivs {

namespace {
std::mutex g_mutex;
WarningHandler g_handler;
}  // namespace

void set_warning_handler(WarningHandler handler) {
    std::lock_guard<std::mutex> lock(g_mutex);
    g_handler = std::move(handler);
}

void warn(const std::string& message) {
    WarningHandler h;
    {
        std::lock_guard<std::mutex> lock(g_mutex);
        h = g_handler;
    }
    if (h) {
        h(message);
    } else {
        std::fprintf(stderr, "warning: %s\n", message.c_str());
    }
}

}  // namespace ivs
