#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "doctest.h"
#include "huberboot/errors.hpp"
#include "huberboot/io.hpp"
#include "huberboot/rng.hpp"

using namespace huberboot;

TEST_CASE("csv loads a plain numeric table") {
    std::istringstream is("y,x1,x2\n1.5,2,3\n-0.25,4e-2,5\n");
    CsvTable table = load_csv(is);
    REQUIRE(table.columns == std::vector<std::string>{"y", "x1", "x2"});
    REQUIRE(table.values.rows() == 2);
    REQUIRE(table.values.cols() == 3);
    CHECK(table.values(0, 0) == 1.5);
    CHECK(table.values(1, 1) == 0.04);
    CHECK(table.values(1, 0) == -0.25);
}

TEST_CASE("csv tolerates bom crlf blank lines and padding") {
    std::istringstream is("\xEF\xBB\xBFy,x1\r\n\r\n 1 , 2 \r\n\n3,4\r\n");
    CsvTable table = load_csv(is);
    CHECK(table.columns[0] == "y");  // BOM stripped
    REQUIRE(table.values.rows() == 2);
    CHECK(table.values(0, 0) == 1.0);
    CHECK(table.values(0, 1) == 2.0);
    CHECK(table.values(1, 1) == 4.0);
}

TEST_CASE("csv errors name the offending location") {
    std::istringstream empty("");
    CHECK_THROWS_AS(load_csv(empty, "data.csv"), parse_error);
    CHECK_THROWS_WITH(([] {
                          std::istringstream s("");
                          load_csv(s, "data.csv");
                      }()),
                      "data.csv: empty file");

    std::istringstream header_only("y,x1\n");
    CHECK_THROWS_WITH(load_csv(header_only, "h.csv"), "h.csv: no data rows");

    std::istringstream ragged("y,x1\n1,2\n3\n");
    CHECK_THROWS_WITH(load_csv(ragged, "r.csv"), "r.csv: row 3 has 1 fields, expected 2");

    std::istringstream text_cell("y,x1\n1,2\n3,abc\n");
    CHECK_THROWS_WITH(load_csv(text_cell, "t.csv"),
                      "t.csv: row 3, column 'x1': not a number: 'abc'");

    std::istringstream partial("y\n1.5x\n");
    CHECK_THROWS_AS(load_csv(partial), parse_error);  // trailing junk in the cell

    CHECK_THROWS_AS(load_csv_file("/nonexistent/path.csv"), parse_error);
}

TEST_CASE("dataset extraction picks the response and keeps column order") {
    std::istringstream is("x1,y,x2\n10,1,20\n30,2,40\n50,3,60\n");
    CsvTable table = load_csv(is);
    Dataset data = dataset_from_table(table);
    REQUIRE(data.n() == 3);
    REQUIRE(data.d() == 2);
    CHECK(data.y(1) == 2.0);
    CHECK(data.x(1, 0) == 30.0);  // x1 first, x2 second
    CHECK(data.x(1, 1) == 40.0);

    Dataset with_icpt = dataset_from_table(table, "y", true);
    REQUIRE(with_icpt.d() == 3);
    CHECK((with_icpt.x.col(0).array() == 1.0).all());
    CHECK(with_icpt.x(2, 1) == 50.0);

    CHECK_THROWS_AS(dataset_from_table(table, "z"), parse_error);
}

TEST_CASE("response only input needs the intercept flag") {
    std::istringstream is("y\n1\n2\n3\n");
    CsvTable table = load_csv(is);
    CHECK_THROWS_AS(dataset_from_table(table), parse_error);
    Dataset data = dataset_from_table(table, "y", true);
    REQUIRE(data.d() == 1);
    CHECK((data.x.array() == 1.0).all());  // pure location model
    CHECK(data.y(2) == 3.0);
}

TEST_CASE("panel extraction splits responses from shared covariates") {
    std::istringstream is(
        "y1,y2,age,y3\n"
        "1,2,30,3\n"
        "4,5,40,6\n"
        "7,8,50,9\n"
        "1,1,60,1\n");
    CsvTable table = load_csv(is);
    PanelData panel = panel_from_table(table);
    REQUIRE(panel.m() == 3);
    REQUIRE(panel.s() == 1);
    REQUIRE(panel.n() == 4);
    CHECK(panel.y(1, 0) == 4.0);
    CHECK(panel.y(1, 2) == 6.0);
    CHECK(panel.x(2, 0) == 50.0);

    CHECK_THROWS_AS(panel_from_table(table, "z"), parse_error);

    std::istringstream all_resp("y1,y2\n1,2\n3,4\n");
    CsvTable t2 = load_csv(all_resp);
    CHECK_THROWS_AS(panel_from_table(t2), parse_error);  // no covariates left
}

TEST_CASE("save and load round trip is bit exact") {
    std::mt19937_64 rng(substream(31337, 0));
    std::normal_distribution<double> normal;
    Dataset data;
    data.x.resize(23, 3);
    data.y.resize(23);
    for (Eigen::Index i = 0; i < 23; ++i) {
        data.y(i) = std::exp(4.0 * normal(rng));  // exercise wide magnitudes
        for (Eigen::Index j = 0; j < 3; ++j) data.x(i, j) = normal(rng) * 1e-7;
    }
    std::ostringstream os;
    save_dataset(data, os);
    std::istringstream is(os.str());
    Dataset back = dataset_from_table(load_csv(is));
    REQUIRE(back.n() == data.n());
    REQUIRE(back.d() == data.d());
    CHECK((back.y.array() == data.y.array()).all());
    CHECK((back.x.array() == data.x.array()).all());
}

TEST_CASE("full precision formatting round trips doubles") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -1.7976931348623157e308, 0.0, 123456.789}) {
        std::string s = format_full(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_full(2.0) == "2");
}
