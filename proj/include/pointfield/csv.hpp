#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pointfield/configuration.hpp"

namespace pointfield {

/// Shortest round-trip decimal form; the same double always renders the
/// same bytes, which the determinism contract depends on.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

/// Buffered CSV assembly with a fixed header row; contents are written
/// to disk only when asked, so dry runs never touch the filesystem.
class CsvWriter {
  public:
    explicit CsvWriter(const std::vector<std::string>& header) {
        row_strings(header);
    }

    CsvWriter& field(const std::string& s) {
        if (col_ > 0) text_ += ',';
        text_ += s;
        ++col_;
        return *this;
    }

    CsvWriter& field(const char* s) { return field(std::string(s)); }
    CsvWriter& field(double x) { return field(format_double(x)); }
    CsvWriter& field(int x) { return field(std::to_string(x)); }
    CsvWriter& field(long long x) { return field(std::to_string(x)); }
    CsvWriter& field(unsigned long long x) { return field(std::to_string(x)); }
    CsvWriter& field(std::size_t x) {
        return field(static_cast<unsigned long long>(x));
    }

    void end_row() {
        text_ += '\n';
        col_ = 0;
    }

    void row_strings(const std::vector<std::string>& fields) {
        for (const auto& f : fields) field(f);
        end_row();
    }

    const std::string& text() const { return text_; }

    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open for writing: " + path);
        out << text_;
        if (!out) throw std::runtime_error("write failed: " + path);
    }

  private:
    std::string text_;
    int col_ = 0;
};

/// One point per row under a replica id, so sampled configurations can be
/// inspected and cross-checked outside the library.
inline void write_configurations_csv(const std::string& path,
                                     const std::vector<Configuration>& samples) {
    if (samples.empty()) throw std::invalid_argument("no configurations");
    const int d = samples[0].dim();
    std::vector<std::string> head = {"replica_id"};
    for (int k = 1; k <= d; ++k) head.push_back("x_" + std::to_string(k));
    CsvWriter csv(head);
    for (std::size_t r = 0; r < samples.size(); ++r) {
        const auto& gamma = samples[r];
        for (std::size_t p = 0; p < gamma.size(); ++p) {
            csv.field(r);
            for (double c : gamma.point(p)) csv.field(c);
            csv.end_row();
        }
    }
    csv.write(path);
}

}  // namespace pointfield
