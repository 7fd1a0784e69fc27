#pragma once

#include <json.hpp>

namespace courtpipe {

/// Insertion-ordered JSON keeps persisted artifacts stable and readable.
using json = nlohmann::ordered_json;

}  // namespace courtpipe
