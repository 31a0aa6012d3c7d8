#ifndef DMLE2E_LOG_HPP
#define DMLE2E_LOG_HPP

#include <string_view>

namespace dmle2e {

/// Writes "warning: <msg>" to stderr once per distinct `key`; silenced by DMLE2E_QUIET.
void warn_once(std::string_view key, std::string_view msg);

}  // namespace dmle2e

#endif  // DMLE2E_LOG_HPP
