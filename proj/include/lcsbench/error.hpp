#pragma once

#include <stdexcept>
#include <string>

namespace lcsbench {

/// Invalid user input: bad config values, malformed maps, missing files.
/// The CLI maps this to exit status 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lcsbench
