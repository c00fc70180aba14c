// File ingestion: line-delimited JSON posts/comments, OHLCV CSV tables, and
// assembly of per-post event windows from daily bars.
#pragma once

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pumpscan/records.hpp"
#include "pumpscan/util.hpp"

namespace pumpscan {

namespace detail {

inline nlohmann::json parse_json_line(const std::string& line, std::size_t line_no) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ParseError(line_no, "malformed record");
  return j;
}

inline std::string require_string(const nlohmann::json& j, const char* key, std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw ParseError(line_no, std::string("missing or non-string field '") + key + "'");
  return it->get<std::string>();
}

inline std::int64_t require_int(const nlohmann::json& j, const char* key, std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer())
    throw ParseError(line_no, std::string("missing or non-integer field '") + key + "'");
  return it->get<std::int64_t>();
}

}  // namespace detail

// One JSON object per line with fields id, author, created, title, body.
// Records come back in file order; ids must be unique.
inline std::vector<Post> parse_posts(std::istream& in) {
  std::vector<Post> posts;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j = detail::parse_json_line(line, line_no);
    Post p;
    p.id = detail::require_string(j, "id", line_no);
    p.author = detail::require_string(j, "author", line_no);
    p.created = detail::require_int(j, "created", line_no);
    p.title = detail::require_string(j, "title", line_no);
    p.body = detail::require_string(j, "body", line_no);
    if (p.id.empty()) throw ParseError(line_no, "empty post id");
    if (p.created <= 0) throw ParseError(line_no, "post created must be > 0");
    if (trim(p.title).empty() && trim(p.body).empty())
      throw ParseError(line_no, "post needs a non-empty title or body");
    if (j.contains("symbol") && j["symbol"].is_string() && !j["symbol"].get<std::string>().empty())
      p.symbol = j["symbol"].get<std::string>();
    if (!seen.insert(p.id).second) throw DataError("duplicate post id '" + p.id + "'");
    posts.push_back(std::move(p));
  }
  return posts;
}

// Fields id, post_id, author, created, body. Referential integrity against
// posts is checked where both sides are available, not here.
inline std::vector<Comment> parse_comments(std::istream& in) {
  std::vector<Comment> comments;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j = detail::parse_json_line(line, line_no);
    Comment c;
    c.id = detail::require_string(j, "id", line_no);
    c.post_id = detail::require_string(j, "post_id", line_no);
    c.author = detail::require_string(j, "author", line_no);
    c.created = detail::require_int(j, "created", line_no);
    c.body = detail::require_string(j, "body", line_no);
    if (c.id.empty()) throw ParseError(line_no, "empty comment id");
    if (c.post_id.empty()) throw ParseError(line_no, "empty comment post_id");
    if (c.created <= 0) throw ParseError(line_no, "comment created must be > 0");
    if (trim(c.body).empty()) throw ParseError(line_no, "comment body empty");
    if (!seen.insert(c.id).second) throw DataError("duplicate comment id '" + c.id + "'");
    comments.push_back(std::move(c));
  }
  return comments;
}

inline void write_posts(std::ostream& out, const std::vector<Post>& posts) {
  for (const auto& p : posts) {
    nlohmann::json j{{"id", p.id},       {"author", p.author}, {"created", p.created},
                     {"title", p.title}, {"body", p.body}};
    if (p.symbol) j["symbol"] = *p.symbol;
    out << j.dump() << '\n';
  }
}

inline void write_comments(std::ostream& out, const std::vector<Comment>& comments) {
  for (const auto& c : comments) {
    nlohmann::json j{{"id", c.id},
                     {"post_id", c.post_id},
                     {"author", c.author},
                     {"created", c.created},
                     {"body", c.body}};
    out << j.dump() << '\n';
  }
}

// CSV with header `date,open,high,low,close,volume`, ISO dates. Output is
// sorted ascending by date; any row violating the bar invariants is an error.
inline std::vector<OhlcvBar> parse_ohlcv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header row");
  if (to_lower(trim(line)) != "date,open,high,low,close,volume")
    throw ParseError(1, "expected header 'date,open,high,low,close,volume'");
  std::vector<OhlcvBar> bars;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cols = split(line, ',');
    if (cols.size() != 6) throw ParseError(line_no, "expected 6 columns");
    OhlcvBar b;
    b.date = Date::from_iso(trim(cols[0]), line_no);
    b.open = parse_double(cols[1], line_no, "open");
    b.high = parse_double(cols[2], line_no, "high");
    b.low = parse_double(cols[3], line_no, "low");
    b.close = parse_double(cols[4], line_no, "close");
    b.volume = parse_int(cols[5], line_no, "volume");
    if (b.volume < 0) throw ParseError(line_no, "negative volume");
    if (b.high < b.low) throw ParseError(line_no, "high < low");
    if (!b.valid()) throw ParseError(line_no, "bar violates price invariants");
    bars.push_back(b);
  }
  std::stable_sort(bars.begin(), bars.end(),
                   [](const OhlcvBar& a, const OhlcvBar& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < bars.size(); ++i)
    if (bars[i].date == bars[i - 1].date)
      throw DataError("duplicate bar date " + bars[i].date.to_iso());
  return bars;
}

inline void write_ohlcv(std::ostream& out, const std::vector<OhlcvBar>& bars) {
  out << "date,open,high,low,close,volume\n";
  for (const auto& b : bars) {
    out << b.date.to_iso() << ',' << format_double(b.open) << ',' << format_double(b.high) << ','
        << format_double(b.low) << ',' << format_double(b.close) << ',' << b.volume << '\n';
  }
}

enum class WindowOutcome { windowed, no_symbol, multi_symbol, insufficient_data };

// Why a post did or did not get an event window. Every post lands in exactly
// one bucket.
struct IngestStats {
  std::size_t posts = 0;
  std::size_t comments = 0;
  std::size_t windowed = 0;
  std::size_t skipped_no_symbol = 0;
  std::size_t skipped_multi_symbol = 0;
  std::size_t skipped_insufficient_data = 0;
};

// Builds the window around `post`: the five business-day bars immediately
// before the post's UTC date and up to four bars from that date onward.
// The covered days must be consecutive business days; a gap (halt/holiday)
// inside the span is a skip, not an interpolation. A post on a non-trading
// day starts its event window at the next available bar. Returns nullopt on
// any skip; the caller decides how to count it.
inline std::optional<EventWindow> build_event_window(const Post& post,
                                                     const std::vector<OhlcvBar>& bars) {
  if (!post.symbol) return std::nullopt;
  const Date post_date = post.date();
  std::size_t first_event = 0;
  while (first_event < bars.size() && bars[first_event].date < post_date) ++first_event;
  if (first_event < 5 || first_event == bars.size()) return std::nullopt;

  EventWindow w;
  w.symbol = *post.symbol;
  w.post_ref = post.id;
  w.baseline.assign(bars.begin() + static_cast<std::ptrdiff_t>(first_event) - 5,
                    bars.begin() + static_cast<std::ptrdiff_t>(first_event));
  for (std::size_t i = 1; i < 5; ++i)
    if (w.baseline[i - 1].date.next_business_day() != w.baseline[i].date) return std::nullopt;
  if (w.baseline.back().date.next_business_day() != bars[first_event].date) return std::nullopt;

  for (std::size_t i = first_event; i < bars.size() && w.event.size() < 4; ++i) {
    if (!w.event.empty()) {
      if (w.event.back().date.next_business_day() != bars[i].date) return std::nullopt;
    }
    w.event.push_back(bars[i]);
  }
  return w;
}

namespace detail {

inline nlohmann::json bar_to_json(const OhlcvBar& b) {
  return {{"date", b.date.to_iso()}, {"open", b.open},   {"high", b.high},
          {"low", b.low},            {"close", b.close}, {"volume", b.volume}};
}

inline OhlcvBar bar_from_json(const nlohmann::json& j, std::size_t line_no) {
  OhlcvBar b;
  b.date = Date::from_iso(require_string(j, "date", line_no), line_no);
  try {
    b.open = j.at("open").get<double>();
    b.high = j.at("high").get<double>();
    b.low = j.at("low").get<double>();
    b.close = j.at("close").get<double>();
    b.volume = j.at("volume").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line_no, std::string("bad bar: ") + e.what());
  }
  if (!b.valid()) throw ParseError(line_no, "bar violates price invariants");
  return b;
}

}  // namespace detail

// Assembled windows travel between pipeline stages as one JSON object per
// line, same bar fields as the CSV.
inline void write_windows(std::ostream& out, const std::vector<EventWindow>& windows) {
  for (const auto& w : windows) {
    nlohmann::json baseline = nlohmann::json::array();
    for (const auto& b : w.baseline) baseline.push_back(detail::bar_to_json(b));
    nlohmann::json event = nlohmann::json::array();
    for (const auto& b : w.event) event.push_back(detail::bar_to_json(b));
    nlohmann::json j{
        {"symbol", w.symbol}, {"post_ref", w.post_ref}, {"baseline", baseline}, {"event", event}};
    out << j.dump() << '\n';
  }
}

inline std::vector<EventWindow> parse_windows(std::istream& in) {
  std::vector<EventWindow> windows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j = detail::parse_json_line(line, line_no);
    EventWindow w;
    w.symbol = detail::require_string(j, "symbol", line_no);
    w.post_ref = detail::require_string(j, "post_ref", line_no);
    if (!j.contains("baseline") || !j["baseline"].is_array() || !j.contains("event") ||
        !j["event"].is_array())
      throw ParseError(line_no, "window needs baseline and event arrays");
    for (const auto& bj : j["baseline"]) w.baseline.push_back(detail::bar_from_json(bj, line_no));
    for (const auto& bj : j["event"]) w.event.push_back(detail::bar_from_json(bj, line_no));
    if (w.baseline.size() != 5) throw ParseError(line_no, "baseline must hold exactly 5 bars");
    if (w.event.empty() || w.event.size() > 4)
      throw ParseError(line_no, "event window must hold 1 to 4 bars");
    windows.push_back(std::move(w));
  }
  return windows;
}

}  // namespace pumpscan
