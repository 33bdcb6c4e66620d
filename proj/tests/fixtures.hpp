#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fixture {

inline const std::vector<std::string>& car_columns()
{
    static const std::vector<std::string> names{"mpg", "cylinders", "displacement", "horsepower",
                                                "weight", "acceleration", "year"};
    return names;
}

// Seven correlated columns driven by one latent "size" variable, roughly the
// shape of the classic cars table.
inline std::string cars_csv(std::size_t rows, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_int_distribution<int> years(70, 82);
    std::ostringstream out;
    out.precision(10);
    for (std::size_t c = 0; c < car_columns().size(); ++c)
        out << (c ? "," : "") << car_columns()[c];
    out << "\n";
    for (std::size_t r = 0; r < rows; ++r) {
        const double size = n01(rng);
        const int cylinders = size < -0.5 ? 4 : size < 0.6 ? 6 : 8;
        const double displacement = 190 + 100 * size + 15 * n01(rng);
        const double horsepower = 105 + 35 * size + 10 * n01(rng);
        const double weight = 2970 + 800 * size + 150 * n01(rng);
        const double acceleration = 15.5 - 1.8 * size + 1.2 * n01(rng);
        const int year = years(rng);
        const double mpg = 23.5 - 6.5 * size + 0.6 * (year - 76) + 2.0 * n01(rng);
        out << mpg << "," << cylinders << "," << displacement << "," << horsepower << "," << weight << ","
            << acceleration << "," << year << "\n";
    }
    return out.str();
}

class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("mdcontour_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace fixture
