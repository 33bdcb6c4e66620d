#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mdcontour {

struct ColumnStats {
    double mean = 0.0;
    double stdev = 0.0; // population standard deviation
    double min = 0.0;
    double max = 0.0;
    bool constant = false;
};

struct Column {
    std::string name;
    std::vector<double> values;
};

// Named numeric columns of equal length. Immutable once built.
class Dataset {
public:
    Dataset() = default;

    // Throws Error{TooFewRows} for fewer than 3 rows, Error{BadArity} on ragged
    // columns, Error{NonNumericCell} on non-finite values.
    explicit Dataset(std::vector<Column> columns);

    std::size_t row_count() const noexcept { return rows_; }
    std::size_t column_count() const noexcept { return columns_.size(); }

    const std::vector<Column>& columns() const noexcept { return columns_; }
    const Column& column(std::size_t i) const { return columns_.at(i); }
    std::optional<std::size_t> find_column(std::string_view name) const;
    std::vector<std::string> column_names() const;

    // Row-major copy of a single row.
    std::vector<double> row(std::size_t r) const;

    // Statistics of the values this dataset was normalized from. Empty until
    // normalize() produced this dataset.
    const std::vector<ColumnStats>& norm_stats() const noexcept { return norm_stats_; }
    bool is_normalized() const noexcept { return !norm_stats_.empty(); }

    // Statistics of the current values.
    ColumnStats stats(std::size_t col) const;

private:
    friend Dataset normalize(const Dataset& ds);
    friend Dataset denormalize(const Dataset& ds);

    std::vector<Column> columns_;
    std::size_t rows_ = 0;
    std::vector<ColumnStats> norm_stats_;
};

struct CsvOptions {
    char delimiter = ',';
    bool skip_non_numeric = false;
};

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
Dataset parse_csv(std::string_view text, const CsvOptions& options = {});

// Z-scores every non-constant column; constant columns become all-zero and are
// flagged in norm_stats().
Dataset normalize(const Dataset& ds);

// Inverse of normalize() using the recorded statistics. Requires a normalized dataset.
Dataset denormalize(const Dataset& ds);

} // namespace mdcontour
