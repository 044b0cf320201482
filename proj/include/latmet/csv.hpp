#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace latmet {

/// CSV assembly with full round-trip precision and a fixed column order.
class CsvWriter {
  public:
    explicit CsvWriter(const std::vector<std::string>& columns) {
        for (size_t i = 0; i < columns.size(); ++i) {
            if (i) body_ += ',';
            body_ += columns[i];
        }
        body_ += '\n';
    }

    CsvWriter& cell(double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return cell_raw(buf);
    }
    CsvWriter& cell(int v) { return cell_raw(std::to_string(v)); }
    CsvWriter& cell(long v) { return cell_raw(std::to_string(v)); }
    CsvWriter& cell(size_t v) { return cell_raw(std::to_string(v)); }
    CsvWriter& cell(const std::string& v) { return cell_raw(v); }

    void end_row() {
        body_ += '\n';
        col_ = 0;
    }

    const std::string& str() const { return body_; }

  private:
    CsvWriter& cell_raw(const std::string& s) {
        if (col_) body_ += ',';
        body_ += s;
        ++col_;
        return *this;
    }
    std::string body_;
    size_t col_ = 0;
};

}  // namespace latmet
