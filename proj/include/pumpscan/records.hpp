// Core domain records: calendar dates, forum documents, daily market bars and
// the event window assembled around a post.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pumpscan/util.hpp"

namespace pumpscan {

// Calendar date stored as days since 1970-01-01 (UTC). Business-day helpers
// treat Saturday/Sunday as non-trading; exchange holidays are not modeled.
struct Date {
  std::int32_t days = 0;

  static Date from_ymd(int y, int m, int d) {
    // Howard Hinnant's days_from_civil.
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return Date{static_cast<std::int32_t>(era * 146097 + static_cast<int>(doe) - 719468)};
  }

  static Date from_unix(std::int64_t ts) {
    std::int64_t d = ts / 86400;
    if (ts < 0 && ts % 86400 != 0) --d;
    return Date{static_cast<std::int32_t>(d)};
  }

  // Parses strict ISO-8601 "YYYY-MM-DD".
  static Date from_iso(std::string_view s, std::size_t line = 0) {
    auto fail = [&] { throw ParseError(line, "bad date '" + std::string(s) + "'"); };
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') fail();
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
      if (s[i] < '0' || s[i] > '9') fail();
    int y = (s[0] - '0') * 1000 + (s[1] - '0') * 100 + (s[2] - '0') * 10 + (s[3] - '0');
    int m = (s[5] - '0') * 10 + (s[6] - '0');
    int d = (s[8] - '0') * 10 + (s[9] - '0');
    if (m < 1 || m > 12 || d < 1 || d > 31) fail();
    Date date = from_ymd(y, m, d);
    if (date.to_iso() != s) fail();  // rejects e.g. Feb 30
    return date;
  }

  void to_ymd(int& y, int& m, int& d) const {
    // civil_from_days.
    std::int64_t z = days + 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
  }

  std::string to_iso() const {
    int y, m, d;
    to_ymd(y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
  }

  // 0 = Monday ... 6 = Sunday. 1970-01-01 was a Thursday.
  int weekday() const {
    std::int64_t w = (static_cast<std::int64_t>(days) + 3) % 7;
    return static_cast<int>(w < 0 ? w + 7 : w);
  }

  bool is_business_day() const { return weekday() < 5; }

  Date next_business_day() const {
    Date d{days + 1};
    while (!d.is_business_day()) ++d.days;
    return d;
  }

  auto operator<=>(const Date&) const = default;
};

struct Post {
  std::string id;
  std::string author;
  std::int64_t created = 0;  // unix seconds, UTC
  std::string title;
  std::string body;
  std::optional<std::string> symbol;  // resolved upper-case ticker

  Date date() const { return Date::from_unix(created); }
};

struct Comment {
  std::string id;
  std::string post_id;
  std::string author;
  std::int64_t created = 0;
  std::string body;
};

struct OhlcvBar {
  Date date;
  double open = 0, high = 0, low = 0, close = 0;
  std::int64_t volume = 0;

  // low <= min(open, close) <= max(open, close) <= high, prices positive,
  // volume non-negative.
  bool valid() const {
    return open > 0 && high > 0 && low > 0 && close > 0 && volume >= 0 &&
           low <= std::min(open, close) && high >= std::max(open, close);
  }
};

// Five estimation-window bars before a post plus one to four event bars from
// the post's date onward, all on consecutive business days.
struct EventWindow {
  std::string symbol;
  std::string post_ref;
  std::vector<OhlcvBar> baseline;  // exactly 5
  std::vector<OhlcvBar> event;     // 1..4
};

enum class DocKind { post, comment };
enum class Label { not_pnd, pnd };

inline const char* to_string(DocKind k) { return k == DocKind::post ? "post" : "comment"; }
inline const char* to_string(Label l) { return l == Label::pnd ? "PnD" : "NotPnD"; }

inline DocKind doc_kind_from(std::string_view s, std::size_t line = 0) {
  if (s == "post") return DocKind::post;
  if (s == "comment") return DocKind::comment;
  throw ParseError(line, "unknown document kind '" + std::string(s) + "'");
}

inline Label label_from(std::string_view s, std::size_t line = 0) {
  if (s == "PnD") return Label::pnd;
  if (s == "NotPnD") return Label::not_pnd;
  throw ParseError(line, "unknown label '" + std::string(s) + "'");
}

}  // namespace pumpscan
