#pragma once

// CSV tables with a commented, self-describing header, and the JSON
// metadata sidecar written next to them.

#include "dicke/errors.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace dicke::io {

struct Column {
  std::string name;
  std::string unit;  // "1" for dimensionless, "-" for labels
  std::string description;
};

using Cell = std::variant<double, long, std::string>;

/// Full-precision decimal: 17 significant digits, "nan"/"inf" spelled out.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvTable {
 public:
  CsvTable(std::string title, std::vector<Column> columns)
      : title_(std::move(title)), columns_(std::move(columns)) {}

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns_.size()) {
      throw Error("CSV row has " + std::to_string(row.size()) + " cells, expected " +
                  std::to_string(columns_.size()));
    }
    rows_.push_back(std::move(row));
  }

  const std::vector<Column>& columns() const { return columns_; }
  std::size_t size() const { return rows_.size(); }

  std::string str() const {
    std::string out = "# " + title_ + "\n";
    for (const auto& c : columns_) {
      out += "# " + c.name + " [" + c.unit + "]: " + c.description + "\n";
    }
    for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i].name;
    out += "\n";
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ",";
        std::visit(
            [&](const auto& v) {
              using T = std::decay_t<decltype(v)>;
              if constexpr (std::is_same_v<T, double>) {
                out += format_double(v);
              } else if constexpr (std::is_same_v<T, long>) {
                out += std::to_string(v);
              } else {
                out += v;
              }
            },
            row[i]);
      }
      out += "\n";
    }
    return out;
  }

  void write(const std::filesystem::path& path) const { write_text(path, str()); }

  static void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open '" + path.string() + "' for writing");
    f << text;
    if (!f) throw Error("write to '" + path.string() + "' failed");
  }

 private:
  std::string title_;
  std::vector<Column> columns_;
  std::vector<std::vector<Cell>> rows_;
};

/// Writes a JSON document with two-space indentation.
inline void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  CsvTable::write_text(path, doc.dump(2) + "\n");
}

/// JSON cannot hold NaN or infinity; those become null.
inline nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace dicke::io
