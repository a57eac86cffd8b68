#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dvpp::textio {

// Line-oriented structured text: [section] headers group key = value entries;
// '#' starts a comment; a repeated "record key" inside a section (e.g. several
// `unit = ...` entries) starts a new record, with the following keys attached
// to it. This file keeps only the raw structure; interpretation is the
// caller's job.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Entry {
  std::string key;
  std::string value;
  int line = 0;
};

struct Section {
  std::string name;
  int line = 0;
  std::vector<Entry> entries;
};

struct Document {
  std::string source;  // file name or label, used in error messages
  std::vector<Section> sections;

  const Section* find(const std::string& name) const;  // first match or null
};

Document parse_string(const std::string& text, const std::string& source);
Document parse_file(const std::string& path);  // ParseError including path

// Conversion helpers that blame the right file:line on failure.
double entry_double(const Entry& e, const std::string& source);
long entry_long(const Entry& e, const std::string& source);
bool entry_bool(const Entry& e, const std::string& source);
std::vector<std::string> split_fields(const std::string& s);

[[noreturn]] void fail_at(const std::string& source, int line,
                          const std::string& message);

}  // namespace dvpp::textio
