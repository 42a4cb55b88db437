#include "brepseq/error.hpp"

#include <atomic>
#include <cstdio>

namespace brepseq {
namespace {

void stderr_handler(const char* message, void*) { std::fprintf(stderr, "warning: %s\n", message); }

std::atomic<WarningHandler> g_handler{&stderr_handler};
std::atomic<void*> g_user_data{nullptr};

}  // namespace

void set_warning_handler(WarningHandler handler, void* user_data) {
  g_user_data.store(user_data);
  g_handler.store(handler);
}

void warn(const std::string& message) {
  if (WarningHandler h = g_handler.load()) h(message.c_str(), g_user_data.load());
}

}  // namespace brepseq
