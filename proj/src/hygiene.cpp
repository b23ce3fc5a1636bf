#include "pinet/hygiene.hpp"

#include <atomic>

namespace pinet::hygiene {

namespace {
std::atomic<AccessLog*> g_log{nullptr};
}

void AccessLog::record(Stage stage, std::size_t row) {
  std::lock_guard lock(mutex_);
  entries_.push_back({stage, row});
}

std::vector<Access> AccessLog::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

void install(AccessLog* log) { g_log.store(log, std::memory_order_release); }

AccessLog* installed() { return g_log.load(std::memory_order_acquire); }

}  // namespace pinet::hygiene
