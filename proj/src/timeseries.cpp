#include "mpconv/timeseries.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mpconv {

TimeSeries::TimeSeries(std::vector<std::string> columns)
    : columns_(std::move(columns)), data_(columns_.size()) {
    if (columns_.empty() || columns_.front() != "t_seconds") {
        throw ValidationError("TimeSeries requires t_seconds as the first column");
    }
}

bool TimeSeries::has(const std::string& name) const {
    for (const auto& c : columns_) {
        if (c == name) return true;
    }
    return false;
}

std::size_t TimeSeries::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i] == name) return i;
    }
    throw ValidationError("TimeSeries has no column named '" + name + "'");
}

const std::vector<double>& TimeSeries::col(const std::string& name) const {
    return data_[index_of(name)];
}

void TimeSeries::reserve(std::size_t n) {
    for (auto& c : data_) c.reserve(n);
}

void TimeSeries::push_row(std::span<const double> row) {
    if (row.size() != columns_.size()) {
        throw ValidationError("TimeSeries row width mismatch");
    }
    for (std::size_t i = 0; i < row.size(); ++i) data_[i].push_back(row[i]);
    ++rows_;
}

std::string to_csv(const TimeSeries& ts) {
    std::string out;
    out.reserve(ts.rows() * ts.cols() * 24 + 512);
    for (std::size_t i = 0; i < ts.cols(); ++i) {
        if (i) out.push_back(',');
        out += ts.columns()[i];
    }
    out.push_back('\n');
    char buf[40];
    for (std::size_t r = 0; r < ts.rows(); ++r) {
        for (std::size_t i = 0; i < ts.cols(); ++i) {
            if (i) out.push_back(',');
            // shortest digits that parse back to the exact value
            const auto res = std::to_chars(buf, buf + sizeof buf, ts.col(i)[r]);
            out.append(buf, res.ptr);
        }
        out.push_back('\n');
    }
    return out;
}

void write_csv(const TimeSeries& ts, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open '" + path + "' for writing");
    f << to_csv(ts);
    if (!f) throw ValidationError("write failed for '" + path + "'");
}

TimeSeries parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> cols;
    std::size_t start = 0;
    while (start <= line.size()) {
        const std::size_t comma = line.find(',', start);
        cols.push_back(line.substr(start, comma == std::string::npos ? comma : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    TimeSeries ts(cols);

    std::vector<double> row(cols.size());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const char* p = line.c_str();
        for (std::size_t i = 0; i < row.size(); ++i) {
            char* end = nullptr;
            row[i] = std::strtod(p, &end);
            if (end == p) {
                throw ValidationError("CSV line " + std::to_string(lineno) +
                                      ": bad number in column " + std::to_string(i + 1));
            }
            p = end;
            if (i + 1 < row.size()) {
                if (*p != ',') {
                    throw ValidationError("CSV line " + std::to_string(lineno) +
                                          ": expected " + std::to_string(row.size()) +
                                          " columns");
                }
                ++p;
            }
        }
        ts.push_row(row);
    }
    return ts;
}

TimeSeries read_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_csv(ss.str());
}

}  // namespace mpconv
