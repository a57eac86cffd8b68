#include "dvpp/textfile.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace dvpp::textio {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string strip_comment(const std::string& s) {
  const std::size_t pos = s.find('#');
  return pos == std::string::npos ? s : s.substr(0, pos);
}

}  // namespace

void fail_at(const std::string& source, int line, const std::string& message) {
  std::ostringstream os;
  os << source << ":" << line << ": " << message;
  throw ParseError(os.str());
}

const Section* Document::find(const std::string& name) const {
  for (const auto& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

Document parse_string(const std::string& text, const std::string& source) {
  Document doc;
  doc.source = source;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  Section* current = nullptr;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail_at(source, line_no, "unterminated section header");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) fail_at(source, line_no, "empty section name");
      doc.sections.push_back(Section{name, line_no, {}});
      current = &doc.sections.back();
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail_at(source, line_no, "expected 'key = value', got '" + line + "'");
    Entry e;
    e.key = trim(line.substr(0, eq));
    e.value = trim(line.substr(eq + 1));
    e.line = line_no;
    if (e.key.empty()) fail_at(source, line_no, "missing key before '='");
    if (!current) fail_at(source, line_no, "entry before any [section] header");
    current->entries.push_back(std::move(e));
  }
  return doc;
}

Document parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

double entry_double(const Entry& e, const std::string& source) {
  const char* begin = e.value.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    fail_at(source, e.line, "key '" + e.key + "': expected a number, got '" + e.value + "'");
  return v;
}

long entry_long(const Entry& e, const std::string& source) {
  const char* begin = e.value.c_str();
  char* end = nullptr;
  const long v = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0')
    fail_at(source, e.line, "key '" + e.key + "': expected an integer, got '" + e.value + "'");
  return v;
}

bool entry_bool(const Entry& e, const std::string& source) {
  if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
  if (e.value == "false" || e.value == "no" || e.value == "0") return false;
  fail_at(source, e.line, "key '" + e.key + "': expected true/false, got '" + e.value + "'");
}

std::vector<std::string> split_fields(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace dvpp::textio
