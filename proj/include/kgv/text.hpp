#ifndef KGV_TEXT_HPP
#define KGV_TEXT_HPP

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kgv {

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
inline bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
inline bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
inline char to_lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }
inline char to_upper(char c) { return static_cast<char>(std::toupper(static_cast<unsigned char>(c))); }

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = to_lower(c);
  return out;
}

namespace detail {

inline std::string_view trim_space_punct(std::string_view s) {
  while (!s.empty() && (is_space(s.front()) || is_punct(s.front()))) s.remove_prefix(1);
  while (!s.empty() && (is_space(s.back()) || is_punct(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Canonical comparison form of a surface string: lowercase, surrounding
/// whitespace and punctuation trimmed, inner whitespace collapsed and leading
/// articles (the/a/an) removed. Idempotent.
inline std::string normalize_mention(std::string_view text) {
  std::string collapsed;
  collapsed.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !collapsed.empty();
      continue;
    }
    if (pending_space) collapsed.push_back(' ');
    pending_space = false;
    collapsed.push_back(to_lower(c));
  }

  std::string_view view = detail::trim_space_punct(collapsed);
  for (bool stripped = true; stripped;) {
    stripped = false;
    for (std::string_view article : {"the ", "a ", "an "}) {
      if (view.size() > article.size() && view.substr(0, article.size()) == article) {
        view.remove_prefix(article.size());
        view = detail::trim_space_punct(view);
        stripped = true;
        break;
      }
    }
  }
  return std::string(view);
}

/// Entity id derived from a display name: the normalized name with spaces
/// replaced by underscores.
inline std::string id_from_name(std::string_view name) {
  std::string id = normalize_mention(name);
  for (auto& c : id) {
    if (c == ' ') c = '_';
  }
  return id;
}

/// Inverse of the id convention, used to compare normalized mentions with ids.
inline std::string id_to_phrase(std::string_view id) {
  std::string out(id);
  for (auto& c : out) {
    if (c == '_') c = ' ';
  }
  return out;
}

/// "religious_structure" -> "religious structure"
inline std::string predicate_phrase(std::string_view predicate) { return id_to_phrase(predicate); }

/// "located_in" -> "Located In"
inline std::string predicate_title(std::string_view predicate) {
  std::string out = predicate_phrase(predicate);
  bool start = true;
  for (auto& c : out) {
    if (c == ' ') {
      start = true;
    } else if (start) {
      c = to_upper(c);
      start = false;
    }
  }
  return out;
}

/// A whitespace-delimited word with surrounding punctuation stripped.
/// Offsets are byte positions into the scanned text.
struct Word {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string lower;
};

inline std::vector<Word> scan_words(std::string_view text) {
  std::vector<Word> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t begin = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    std::size_t end = i;
    while (begin < end && is_punct(text[begin])) ++begin;
    while (end > begin && is_punct(text[end - 1])) --end;
    if (begin < end) words.push_back({begin, end, to_lower(text.substr(begin, end - begin))});
  }
  return words;
}

inline std::vector<std::string> split_spaces(std::string_view s) {
  std::vector<std::string> parts;
  for (const auto& w : scan_words(s)) parts.push_back(w.lower);
  return parts;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline std::string hex64(std::uint64_t value) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

}  // namespace kgv

#endif  // KGV_TEXT_HPP
