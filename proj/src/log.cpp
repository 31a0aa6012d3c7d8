#include "dmle2e/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <set>
#include <string>

namespace dmle2e {

void warn_once(std::string_view key, std::string_view msg) {
  static std::mutex mu;
  static std::set<std::string, std::less<>> seen;
  std::lock_guard lock(mu);
  if (std::getenv("DMLE2E_QUIET") != nullptr || seen.contains(key)) return;
  seen.emplace(key);
  std::cerr << "warning: " << msg << '\n';
}

}  // namespace dmle2e
