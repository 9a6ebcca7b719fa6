#ifndef MPCONV_TIMESERIES_HPP
#define MPCONV_TIMESERIES_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mpconv/errors.hpp"

namespace mpconv {

/// Column-major record of uniformly sampled signals. The first column is
/// always t_seconds.
class TimeSeries {
public:
    TimeSeries() = default;
    explicit TimeSeries(std::vector<std::string> columns);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return columns_.size(); }
    const std::vector<std::string>& columns() const { return columns_; }

    bool has(const std::string& name) const;
    const std::vector<double>& col(const std::string& name) const;
    const std::vector<double>& col(std::size_t index) const { return data_.at(index); }

    void reserve(std::size_t n);
    void push_row(std::span<const double> row);

    bool operator==(const TimeSeries& other) const {
        return columns_ == other.columns_ && data_ == other.data_;
    }

private:
    std::size_t index_of(const std::string& name) const;

    std::vector<std::string> columns_;
    std::vector<std::vector<double>> data_;
    std::size_t rows_ = 0;
};

/// Full-precision CSV (17 significant digits, value-exact round trip).
void write_csv(const TimeSeries& ts, const std::string& path);
std::string to_csv(const TimeSeries& ts);
TimeSeries read_csv(const std::string& path);
TimeSeries parse_csv(const std::string& text);

}  // namespace mpconv

#endif
