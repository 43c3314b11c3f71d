#include "kfp/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kfp/errors.hpp"

namespace kfp {

namespace {

std::string trim(const std::string& s) {
    const char* ws = " \t\r";
    const size_t a = s.find_first_not_of(ws);
    if (a == std::string::npos) return "";
    const size_t b = s.find_last_not_of(ws);
    return s.substr(a, b - a + 1);
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '_' && c != '-')
            return false;
    return true;
}

bool parse_double(const std::string& tok, double& out) {
    const char* b = tok.data();
    const char* e = b + tok.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e;
}

std::string with_precision(double v, std::chars_format fmt, int prec) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, fmt, prec);
    (void)ec;
    return std::string(buf, p);
}

} // namespace

Config Config::parse_string(const std::string& text, const std::string& name) {
    Config cfg;
    cfg.name_ = name;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        const std::string where = name + ":" + std::to_string(lineno);
        if (eq == std::string::npos)
            throw precondition_error(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw precondition_error(where + ": expected 'key = value'");
        if (!valid_key(key)) throw precondition_error(where + ": invalid key '" + key + "'");
        auto [it, fresh] = cfg.entries_.try_emplace(key, Entry{trim(line.substr(eq + 1)), lineno});
        if (!fresh)
            throw precondition_error(where + ": duplicate key '" + key
                                     + "' (first defined at line "
                                     + std::to_string(it->second.line) + ")");
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw precondition_error("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

bool Config::has(const std::string& key) const { return entries_.count(key) != 0; }

const Config::Entry& Config::require(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
        throw precondition_error(name_ + ": missing key '" + key + "'");
    return it->second;
}

void Config::fail(const std::string& key, const Entry& e, const std::string& what) const {
    throw precondition_error(name_ + ":" + std::to_string(e.line) + ": value of '" + key
                             + "' is not " + what);
}

double Config::get_double(const std::string& key) const {
    const Entry& e = require(key);
    double v = 0.0;
    if (!parse_double(e.raw, v)) fail(key, e, "a number");
    return v;
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

int Config::get_int(const std::string& key) const {
    const Entry& e = require(key);
    int v = 0;
    const char* b = e.raw.data();
    const char* end = b + e.raw.size();
    auto [p, ec] = std::from_chars(b, end, v);
    if (ec != std::errc() || p != end) fail(key, e, "an integer");
    return v;
}

int Config::get_int(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::string Config::get_string(const std::string& key) const { return require(key).raw; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

std::vector<double> Config::get_list(const std::string& key) const {
    const Entry& e = require(key);
    std::vector<double> out;
    std::istringstream in(e.raw);
    std::string tok;
    while (in >> tok) {
        double v = 0.0;
        if (!parse_double(tok, v)) fail(key, e, "a number list");
        out.push_back(v);
    }
    return out;
}

std::vector<double> Config::get_list(const std::string& key,
                                     const std::vector<double>& fallback) const {
    return has(key) ? get_list(key) : fallback;
}

std::string format_g15(double v) {
    return with_precision(v, std::chars_format::general, 15);
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns)
    : path_(path), columns_(columns.size()) {
    if (columns.empty()) throw precondition_error("CsvWriter: needs at least one column");
    for (size_t i = 0; i < columns.size(); ++i) {
        if (i) buffer_ += ',';
        buffer_ += columns[i];
    }
    buffer_ += '\n';
}

CsvWriter::~CsvWriter() {
    try {
        close();
    } catch (...) {
        // destructor swallows write failures; call close() to observe them
    }
}

void CsvWriter::row(const std::vector<double>& values) {
    if (!open_) throw precondition_error("CsvWriter: table already closed");
    if (values.size() != columns_)
        throw precondition_error("CsvWriter: row width does not match the header");
    for (size_t i = 0; i < values.size(); ++i) {
        if (i) buffer_ += ',';
        buffer_ += format_g15(values[i]);
    }
    buffer_ += '\n';
}

void CsvWriter::close() {
    if (!open_) return;
    open_ = false;
    std::ofstream out(path_, std::ios::binary);
    out << buffer_;
    if (!out) throw std::runtime_error("cannot write file '" + path_ + "'");
}

namespace {

constexpr const char* kPalette[] = {"#1761a0", "#c8452c", "#2d8a4e", "#8a2dab", "#8a6d00"};

std::string px(double v) { return with_precision(v, std::chars_format::fixed, 2); }

std::string tick_label(double v, bool log_axis) {
    return with_precision(log_axis ? std::pow(10.0, v) : v, std::chars_format::general, 6);
}

} // namespace

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series, bool log_x, bool log_y,
                     const std::string& annotation) {
    // collect (possibly log-scaled) extents
    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    bool seen = false;
    std::vector<SvgSeries> data = series;
    for (SvgSeries& s : data) {
        if (s.x.size() != s.y.size())
            throw precondition_error("write_svg_chart: series x and y lengths differ");
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
                throw precondition_error("write_svg_chart: needs finite data");
            if (log_x) {
                if (!(s.x[i] > 0.0))
                    throw precondition_error("write_svg_chart: log axis needs positive data");
                s.x[i] = std::log10(s.x[i]);
            }
            if (log_y) {
                if (!(s.y[i] > 0.0))
                    throw precondition_error("write_svg_chart: log axis needs positive data");
                s.y[i] = std::log10(s.y[i]);
            }
            if (!seen) {
                xmin = xmax = s.x[i];
                ymin = ymax = s.y[i];
                seen = true;
            } else {
                xmin = std::min(xmin, s.x[i]);
                xmax = std::max(xmax, s.x[i]);
                ymin = std::min(ymin, s.y[i]);
                ymax = std::max(ymax, s.y[i]);
            }
        }
    }
    if (xmax <= xmin) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax <= ymin) {
        ymin -= 0.5;
        ymax += 0.5;
    }

    const double W = 640, H = 480, ml = 70, mr = 20, mt = 50, mb = 55;
    const double pw = W - ml - mr, ph = H - mt - mb;
    auto X = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto Y = [&](double y) { return mt + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
           "viewBox=\"0 0 640 480\">\n";
    svg += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
    svg += "<text x=\"320\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">" + title + "</text>\n";
    if (!annotation.empty())
        svg += "<text x=\"320\" y=\"40\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"12\" fill=\"#444444\">" + annotation + "</text>\n";

    // axes and ticks
    svg += "<line x1=\"" + px(ml) + "\" y1=\"" + px(mt + ph) + "\" x2=\"" + px(ml + pw)
           + "\" y2=\"" + px(mt + ph) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + px(ml) + "\" y1=\"" + px(mt) + "\" x2=\"" + px(ml) + "\" y2=\""
           + px(mt + ph) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 4.0;
        const double fy = ymin + (ymax - ymin) * i / 4.0;
        const double tx = X(fx), ty = Y(fy);
        svg += "<line x1=\"" + px(tx) + "\" y1=\"" + px(mt + ph) + "\" x2=\"" + px(tx)
               + "\" y2=\"" + px(mt + ph + 5) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + px(tx) + "\" y=\"" + px(mt + ph + 18)
               + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
               + tick_label(fx, log_x) + "</text>\n";
        svg += "<line x1=\"" + px(ml - 5) + "\" y1=\"" + px(ty) + "\" x2=\"" + px(ml)
               + "\" y2=\"" + px(ty) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + px(ml - 8) + "\" y=\"" + px(ty + 3)
               + "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
               + tick_label(fy, log_y) + "</text>\n";
    }
    svg += "<text x=\"" + px(ml + pw / 2) + "\" y=\"" + px(H - 12)
           + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + x_label
           + "</text>\n";
    svg += "<text x=\"16\" y=\"" + px(mt + ph / 2)
           + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
             "transform=\"rotate(-90 16 " + px(mt + ph / 2) + ")\">" + y_label + "</text>\n";

    for (size_t si = 0; si < data.size(); ++si) {
        const SvgSeries& s = data[si];
        const char* color = kPalette[si % (sizeof kPalette / sizeof *kPalette)];
        if (!s.x.empty()) {
            std::string pts;
            for (size_t i = 0; i < s.x.size(); ++i) {
                if (i) pts += ' ';
                pts += px(X(s.x[i])) + "," + px(Y(s.y[i]));
            }
            svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\""
                   + std::string(color) + "\" stroke-width=\"1.5\"/>\n";
        }
        if (!s.label.empty()) {
            const double ly = mt + 14 + 16 * static_cast<double>(si);
            svg += "<line x1=\"" + px(ml + pw - 120) + "\" y1=\"" + px(ly - 4) + "\" x2=\""
                   + px(ml + pw - 100) + "\" y2=\"" + px(ly - 4) + "\" stroke=\""
                   + std::string(color) + "\" stroke-width=\"1.5\"/>\n";
            svg += "<text x=\"" + px(ml + pw - 94) + "\" y=\"" + px(ly)
                   + "\" font-family=\"sans-serif\" font-size=\"11\">" + s.label + "</text>\n";
        }
    }
    svg += "</svg>\n";

    std::ofstream out(path, std::ios::binary);
    out << svg;
    if (!out) throw std::runtime_error("cannot write file '" + path + "'");
}

} // namespace kfp
