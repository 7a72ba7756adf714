#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "invwave/io.hpp"

using namespace invwave;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / "invwave_io_test" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST(Fmt, SeventeenDigitsRoundTrip) {
    for (double x : {0.1, 1.0 / 3.0, 1.788854381999832, -2.5e-300, 6.02214076e23}) {
        EXPECT_EQ(std::stod(io::fmt(x)), x);
    }
    EXPECT_EQ(io::fmt(0.1), "0.10000000000000001");
}

TEST(Csv, WriteReadRoundTrip) {
    const fs::path d = scratch("csv");
    const Vec a{1.0, 2.0, 1.0 / 3.0}, b{-1e-20, 0.0, 7.5};
    io::write_csv(d / "sub" / "t.csv", {"xi", "u"}, {&a, &b});
    std::ifstream f(d / "sub" / "t.csv");
    std::string header;
    std::getline(f, header);
    EXPECT_EQ(header, "xi,u");
    const io::CsvTable t = io::read_csv(d / "sub" / "t.csv");
    EXPECT_EQ(t.col("xi"), a);
    EXPECT_EQ(t.col("u"), b);
    EXPECT_THROW(t.col("v"), ParameterError);
}

TEST(Csv, RaggedColumnsRejected) {
    const fs::path d = scratch("ragged");
    const Vec a{1.0, 2.0}, b{1.0};
    EXPECT_THROW(io::write_csv(d / "x.csv", {"a", "b"}, {&a, &b}), InternalError);
}

TEST(Csv, BadInputIsAParameterError) {
    const fs::path d = scratch("bad");
    {
        std::ofstream f(d / "x.csv");
        f << "xi,u\n1,2\n3,abc\n";
    }
    EXPECT_THROW(io::read_csv(d / "x.csv"), ParameterError);
    EXPECT_THROW(io::read_csv(d / "missing.csv"), ParameterError);
}

TEST(Json, NonFiniteBecomesNull) {
    EXPECT_TRUE(io::num(std::nan("")).is_null());
    EXPECT_TRUE(io::num(INFINITY).is_null());
    EXPECT_EQ(io::num(2.5).get<double>(), 2.5);
    const io::Json a = io::array({1.0, std::nan("")});
    EXPECT_EQ(a.dump(), "[1.0,null]");
}
