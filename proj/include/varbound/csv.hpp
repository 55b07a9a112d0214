#pragma once

#include <locale>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace varbound {

// Shortest form is not required; 17 significant digits round-trip a double.
inline std::string format_double(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << v;
  return os.str();
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write(std::ostream& os) const {
    auto line = [&os](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << quote(cells[i]);
      }
      os << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
  }

  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  }
};

}  // namespace varbound
