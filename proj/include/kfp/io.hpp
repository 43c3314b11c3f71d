#pragma once

#include <map>
#include <string>
#include <vector>

namespace kfp {

// Key-value experiment configuration. One `key = value` per line, `#` starts
// a comment, blank lines ignored. Keys are [A-Za-z0-9_.-]+; values keep their
// raw text until a typed getter asks for them, so every error can point at
// the offending line.
class Config {
  public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text,
                               const std::string& name = "<string>");

    bool has(const std::string& key) const;

    // required getters throw when the key is missing or the value does not
    // parse; the fallback overloads only default the missing-key case
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::vector<double> get_list(const std::string& key) const;
    std::vector<double> get_list(const std::string& key,
                                 const std::vector<double>& fallback) const;

  private:
    struct Entry {
        std::string raw;
        int line = 0;
    };

    const Entry& require(const std::string& key) const;
    [[noreturn]] void fail(const std::string& key, const Entry& e,
                           const std::string& what) const;

    std::string name_;
    std::map<std::string, Entry> entries_;
};

// one double, locale-free, 15 significant digits, printf %g conventions
std::string format_g15(double v);

// CSV table with a fixed header; every cell goes through format_g15 so
// identical inputs give byte-identical files
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns);
    ~CsvWriter();
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void row(const std::vector<double>& values);
    void close();

  private:
    std::string path_;
    std::string buffer_;
    size_t columns_ = 0;
    bool open_ = true;
};

struct SvgSeries {
    std::vector<double> x, y;
    std::string label;
};

// minimal standalone line chart; log axes refuse nonpositive data
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series, bool log_x = false,
                     bool log_y = false, const std::string& annotation = "");

} // namespace kfp
