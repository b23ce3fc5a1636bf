#pragma once

#include <cstddef>
#include <mutex>
#include <vector>

namespace pinet::hygiene {

// Instrumentation for data-split discipline. When a log is installed, every
// stage that reads dataset rows records (stage, row) so tests can verify that
// training reads only D1 and calibration only D2. No-op otherwise.

enum class Stage { preprocess, train, calibrate, evaluate };

struct Access {
  Stage stage;
  std::size_t row;
};

class AccessLog {
 public:
  void record(Stage stage, std::size_t row);
  std::vector<Access> entries() const;

 private:
  mutable std::mutex mutex_;
  std::vector<Access> entries_;
};

void install(AccessLog* log);
AccessLog* installed();

inline void record(Stage stage, std::size_t row) {
  if (auto* log = installed()) log->record(stage, row);
}

class ScopedAccessLog {
 public:
  explicit ScopedAccessLog(AccessLog& log) { install(&log); }
  ~ScopedAccessLog() { install(nullptr); }
  ScopedAccessLog(const ScopedAccessLog&) = delete;
  ScopedAccessLog& operator=(const ScopedAccessLog&) = delete;
};

}  // namespace pinet::hygiene
