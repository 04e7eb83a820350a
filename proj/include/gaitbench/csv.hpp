#pragma once

// Minimal CSV emitter. Doubles are written with 17 significant digits so a
// value read back parses to the same bits.

#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

namespace gaitbench {

inline std::string format_double(double v) { return fmt::format("{:.17g}", v); }

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void comment(std::string_view text) { out_ << "# " << text << '\n'; }

  void header(std::span<const std::string> names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (i) out_ << ',';
      out_ << names[i];
    }
    out_ << '\n';
  }

  void row(std::span<const double> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << format_double(values[i]);
    }
    out_ << '\n';
  }

  // Mixed rows: pre-formatted cells.
  void cells(std::span<const std::string> values) { header(values); }

 private:
  std::ostream& out_;
};

}  // namespace gaitbench
