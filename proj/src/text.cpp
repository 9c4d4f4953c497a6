#include "faqfuse/text.hpp"

#include <memory>

#include <unicode/brkiter.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "faqfuse/error.hpp"

namespace faqfuse {
namespace {

bool is_cjk(UChar32 c) {
  if (u_hasBinaryProperty(c, UCHAR_IDEOGRAPHIC)) return true;
  UErrorCode status = U_ZERO_ERROR;
  switch (uscript_getScript(c, &status)) {
    case USCRIPT_HAN:
    case USCRIPT_HIRAGANA:
    case USCRIPT_KATAKANA:
    case USCRIPT_HANGUL:
    case USCRIPT_BOPOMOFO:
      return U_SUCCESS(status) && u_isalpha(c);
    default:
      return false;
  }
}

bool is_run_char(UChar32 c) {
  if (u_isalpha(c) || u_isdigit(c)) return true;
  const auto category = u_charType(c);
  return category == U_NON_SPACING_MARK || category == U_COMBINING_SPACING_MARK;
}

UChar32 fold_latin(UChar32 c) {
  UErrorCode status = U_ZERO_ERROR;
  if (uscript_getScript(c, &status) == USCRIPT_LATIN && U_SUCCESS(status)) return u_tolower(c);
  return c;
}

void append_utf8(std::string& out, UChar32 c) {
  char buf[U8_MAX_LENGTH];
  int32_t len = 0;
  UBool error = false;
  U8_APPEND(buf, len, U8_MAX_LENGTH, c, error);
  if (!error) out.append(buf, static_cast<std::size_t>(len));
}

icu::UnicodeString to_unicode_nfc(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
  const auto source = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  auto normalized = normalizer->normalize(source, status);
  if (U_FAILURE(status)) throw Error("NFC normalization failed");
  return normalized;
}

std::vector<std::string> tokenize_chars(const icu::UnicodeString& text) {
  std::vector<std::string> tokens;
  std::string run;
  auto flush = [&] {
    if (!run.empty()) tokens.push_back(std::move(run));
    run.clear();
  };
  for (int32_t i = 0; i < text.length(); i = text.moveIndex32(i, 1)) {
    const UChar32 c = text.char32At(i);
    if (is_cjk(c)) {
      flush();
      std::string single;
      append_utf8(single, c);
      tokens.push_back(std::move(single));
    } else if (is_run_char(c)) {
      append_utf8(run, fold_latin(c));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::vector<std::string> tokenize_words(const icu::UnicodeString& text) {
  UErrorCode status = U_ZERO_ERROR;
  std::unique_ptr<icu::BreakIterator> it(icu::BreakIterator::createWordInstance(icu::Locale::getRoot(), status));
  if (U_FAILURE(status)) throw Error("ICU word break iterator unavailable");
  it->setText(text);

  std::vector<std::string> tokens;
  int32_t start = it->first();
  for (int32_t end = it->next(); end != icu::BreakIterator::DONE; start = end, end = it->next()) {
    if (it->getRuleStatus() < UBRK_WORD_NONE_LIMIT) continue;
    std::string token;
    for (int32_t i = start; i < end; i = text.moveIndex32(i, 1)) append_utf8(token, fold_latin(text.char32At(i)));
    if (!token.empty()) tokens.push_back(std::move(token));
  }
  return tokens;
}

}  // namespace

std::string_view to_string(TokenizerMode mode) {
  return mode == TokenizerMode::kChar ? "char" : "unicode-word";
}

std::optional<TokenizerMode> parse_tokenizer_mode(std::string_view name) {
  if (name == "char") return TokenizerMode::kChar;
  if (name == "unicode-word" || name == "word") return TokenizerMode::kUnicodeWord;
  return std::nullopt;
}

std::string nfc(std::string_view text) {
  std::string out;
  to_unicode_nfc(text).toUTF8String(out);
  return out;
}

std::vector<std::string> tokenize(std::string_view text, TokenizerMode mode) {
  if (text.empty()) return {};
  const auto normalized = to_unicode_nfc(text);
  return mode == TokenizerMode::kChar ? tokenize_chars(normalized) : tokenize_words(normalized);
}

std::string_view trim(std::string_view text) {
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t begin = 0;
  while (begin < length) {
    int32_t next = begin;
    UChar32 c;
    U8_NEXT(s, next, length, c);
    if (c < 0 || !u_isUWhiteSpace(c)) break;
    begin = next;
  }
  int32_t end = length;
  while (end > begin) {
    int32_t prev = end;
    UChar32 c;
    U8_PREV(s, 0, prev, c);
    if (c < 0 || !u_isUWhiteSpace(c)) break;
    end = prev;
  }
  return text.substr(static_cast<std::size_t>(begin), static_cast<std::size_t>(end - begin));
}

}  // namespace faqfuse
