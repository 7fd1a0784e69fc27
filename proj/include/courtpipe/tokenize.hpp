#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace courtpipe {

/// Identifier of the tokenization scheme; stored in index parameters and the
/// knowledge-base manifest so persisted artifacts can detect mismatches.
inline constexpr const char* kTokenizerId = "cjk-uni-bi+latin-lower/1";

/// Search tokenizer. CJK runs emit all character unigrams followed by the
/// overlapping character bigrams of the run; ASCII alphanumeric runs emit one
/// lowercased token each. Everything else separates runs.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace courtpipe
