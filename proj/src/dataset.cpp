#include "mdcontour/dataset.hpp"

#include "mdcontour/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace mdcontour {

namespace {

// Relative threshold under which a column's spread counts as zero.
constexpr double kConstantTolerance = 1e-12;

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char delimiter)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(delimiter, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

std::optional<double> parse_number(std::string_view cell)
{
    if (cell.empty())
        return std::nullopt;
    if (cell.front() == '+')
        cell.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value))
        return std::nullopt;
    return value;
}

ColumnStats compute_stats(const std::vector<double>& v)
{
    ColumnStats s;
    const auto n = static_cast<double>(v.size());
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (const double x : v)
        ss += (x - s.mean) * (x - s.mean);
    s.stdev = std::sqrt(ss / n);
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    s.min = *mn;
    s.max = *mx;
    s.constant = !(s.stdev > kConstantTolerance * std::max(1.0, std::abs(s.mean)));
    return s;
}

} // namespace

Dataset::Dataset(std::vector<Column> columns) : columns_(std::move(columns))
{
    if (columns_.empty())
        throw Error(ErrorCode::NoNumericColumns, "dataset has no numeric columns");
    rows_ = columns_.front().values.size();
    for (const Column& c : columns_) {
        if (c.values.size() != rows_)
            throw Error(ErrorCode::BadArity, "column '" + c.name + "' has " + std::to_string(c.values.size())
                                                 + " values, expected " + std::to_string(rows_));
        for (std::size_t r = 0; r < rows_; ++r)
            if (!std::isfinite(c.values[r]))
                throw Error(ErrorCode::NonNumericCell,
                            "non-finite value in column '" + c.name + "' row " + std::to_string(r + 1));
    }
    if (rows_ < 3)
        throw Error(ErrorCode::TooFewRows, "dataset needs at least 3 rows, got " + std::to_string(rows_));
}

std::optional<std::size_t> Dataset::find_column(std::string_view name) const
{
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i].name == name)
            return i;
    return std::nullopt;
}

std::vector<std::string> Dataset::column_names() const
{
    std::vector<std::string> names;
    names.reserve(columns_.size());
    for (const Column& c : columns_)
        names.push_back(c.name);
    return names;
}

std::vector<double> Dataset::row(std::size_t r) const
{
    std::vector<double> out;
    out.reserve(columns_.size());
    for (const Column& c : columns_)
        out.push_back(c.values.at(r));
    return out;
}

ColumnStats Dataset::stats(std::size_t col) const { return compute_stats(columns_.at(col).values); }

Dataset parse_csv(std::string_view text, const CsvOptions& options)
{
    std::vector<std::string_view> lines;
    {
        std::size_t start = 0;
        while (start <= text.size()) {
            std::size_t pos = text.find('\n', start);
            if (pos == std::string_view::npos)
                pos = text.size();
            std::string_view line = text.substr(start, pos - start);
            if (!trim(line).empty())
                lines.push_back(line);
            start = pos + 1;
        }
    }
    if (lines.empty())
        throw Error(ErrorCode::MissingHeader, "CSV input is empty; a header row is required");

    std::string_view header_line = lines.front();
    if (header_line.size() >= 3 && header_line.substr(0, 3) == "\xEF\xBB\xBF")
        header_line.remove_prefix(3);
    const auto header = split(header_line, options.delimiter);
    bool header_looks_numeric = true;
    for (const auto& h : header)
        if (h.empty() || !parse_number(h))
            header_looks_numeric = false;
    if (header_looks_numeric)
        throw Error(ErrorCode::MissingHeader, "first CSV row contains only numbers; a header row is required");

    const std::size_t ncols = header.size();
    std::vector<std::vector<double>> values(ncols);
    std::vector<bool> numeric(ncols, true);
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto cells = split(lines[li], options.delimiter);
        if (cells.size() != ncols)
            throw Error(ErrorCode::BadArity, "row " + std::to_string(li + 1) + " has " + std::to_string(cells.size())
                                                 + " fields, header has " + std::to_string(ncols));
        for (std::size_t c = 0; c < ncols; ++c) {
            if (!numeric[c])
                continue;
            if (const auto v = parse_number(cells[c])) {
                values[c].push_back(*v);
            } else if (options.skip_non_numeric) {
                numeric[c] = false;
            } else {
                throw Error(ErrorCode::NonNumericCell, "non-numeric cell at row " + std::to_string(li + 1)
                                                           + ", column " + std::to_string(c + 1) + " ('"
                                                           + std::string(header[c]) + "')");
            }
        }
    }

    const std::size_t rows = lines.size() - 1;
    if (rows < 3)
        throw Error(ErrorCode::TooFewRows, "dataset needs at least 3 rows, got " + std::to_string(rows));

    std::vector<Column> columns;
    for (std::size_t c = 0; c < ncols; ++c)
        if (numeric[c])
            columns.push_back(Column{std::string(header[c]), std::move(values[c])});
    return Dataset(std::move(columns));
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str(), options);
}

Dataset normalize(const Dataset& ds)
{
    Dataset out = ds;
    out.norm_stats_.clear();
    for (Column& c : out.columns_) {
        const ColumnStats s = compute_stats(c.values);
        for (double& x : c.values)
            x = s.constant ? 0.0 : (x - s.mean) / s.stdev;
        out.norm_stats_.push_back(s);
    }
    return out;
}

Dataset denormalize(const Dataset& ds)
{
    if (!ds.is_normalized())
        throw Error(ErrorCode::InvalidParameter, "denormalize requires a normalized dataset");
    Dataset out = ds;
    for (std::size_t i = 0; i < out.columns_.size(); ++i) {
        const ColumnStats& s = ds.norm_stats_[i];
        for (double& x : out.columns_[i].values)
            x = s.constant ? s.mean : x * s.stdev + s.mean;
    }
    out.norm_stats_.clear();
    return out;
}

} // namespace mdcontour
