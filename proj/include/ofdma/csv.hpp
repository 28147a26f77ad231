#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ofdma::csv {

using Cell = std::variant<long long, double, std::string>;

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// CSV with a fixed header and %.17g floats; output is byte-deterministic for
// identical inputs.
class Writer {
  public:
    Writer(const std::filesystem::path& path, const std::string& header) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open output file: " + path.string());
        out_ << header << '\n';
    }

    void row(const std::vector<Cell>& cells) {
        bool first = true;
        for (const auto& c : cells) {
            if (!first) out_ << ',';
            first = false;
            if (std::holds_alternative<long long>(c)) {
                out_ << std::get<long long>(c);
            } else if (std::holds_alternative<double>(c)) {
                out_ << format_double(std::get<double>(c));
            } else {
                out_ << std::get<std::string>(c);
            }
        }
        out_ << '\n';
    }

  private:
    std::ofstream out_;
};

}  // namespace ofdma::csv
