#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace faqfuse {

enum class TokenizerMode {
  kChar,         ///< one token per CJK character, Latin/digit runs grouped
  kUnicodeWord,  ///< Unicode word boundaries
};

std::string_view to_string(TokenizerMode mode);
std::optional<TokenizerMode> parse_tokenizer_mode(std::string_view name);

/// NFC-normalizes `text` (valid UTF-8).
std::string nfc(std::string_view text);

/// Both modes apply NFC and lowercase Latin-script letters. Punctuation,
/// symbols and whitespace never become tokens.
std::vector<std::string> tokenize(std::string_view text, TokenizerMode mode);

/// Trims ASCII and Unicode whitespace from both ends.
std::string_view trim(std::string_view text);

}  // namespace faqfuse
