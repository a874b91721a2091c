#include "huberboot/io.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "huberboot/errors.hpp"

namespace huberboot {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

CsvTable load_csv(std::istream& is, const std::string& source_name) {
    std::string line;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        rows.push_back(split_line(line));
    }
    if (rows.empty()) throw parse_error(source_name + ": empty file");

    CsvTable table;
    // Tolerate a UTF-8 BOM in front of the first header cell.
    if (rows[0][0].rfind("\xEF\xBB\xBF", 0) == 0) rows[0][0].erase(0, 3);
    table.columns = rows[0];
    const std::size_t width = table.columns.size();
    if (rows.size() < 2) throw parse_error(source_name + ": no data rows");

    table.values.resize(static_cast<Eigen::Index>(rows.size() - 1),
                        static_cast<Eigen::Index>(width));
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != width)
            throw parse_error(source_name + ": row " + std::to_string(r + 1) + " has " +
                              std::to_string(rows[r].size()) + " fields, expected " +
                              std::to_string(width));
        for (std::size_t c = 0; c < width; ++c) {
            const std::string& cell = rows[r][c];
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || ptr != cell.data() + cell.size())
                throw parse_error(source_name + ": row " + std::to_string(r + 1) +
                                  ", column '" + table.columns[c] +
                                  "': not a number: '" + cell + "'");
            table.values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) = v;
        }
    }
    return table;
}

CsvTable load_csv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw parse_error(path + ": cannot open file");
    return load_csv(is, path);
}

Dataset dataset_from_table(const CsvTable& table, const std::string& response,
                           bool add_intercept) {
    Eigen::Index response_col = -1;
    for (std::size_t c = 0; c < table.columns.size(); ++c)
        if (table.columns[c] == response) {
            response_col = static_cast<Eigen::Index>(c);
            break;
        }
    if (response_col < 0)
        throw parse_error("no response column '" + response + "' in input");
    if (table.columns.size() < 2 && !add_intercept)
        throw parse_error("input has a response column but no covariates");

    const Eigen::Index n = table.values.rows();
    const Eigen::Index width = table.values.cols();
    Dataset data;
    data.y = table.values.col(response_col);
    if (width == 1) {
        // Response-only file with --add-intercept: a pure location model.
        data.x = Eigen::MatrixXd::Ones(n, 1);
    } else {
        data.x.resize(n, width - 1);
        Eigen::Index out = 0;
        for (Eigen::Index c = 0; c < width; ++c)
            if (c != response_col) data.x.col(out++) = table.values.col(c);
        if (add_intercept) data = with_intercept(data);
    }
    data.validate();
    return data;
}

PanelData panel_from_table(const CsvTable& table, const std::string& response_prefix) {
    std::vector<Eigen::Index> resp, covs;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (table.columns[c].rfind(response_prefix, 0) == 0)
            resp.push_back(static_cast<Eigen::Index>(c));
        else
            covs.push_back(static_cast<Eigen::Index>(c));
    }
    if (resp.empty())
        throw parse_error("no columns start with response prefix '" + response_prefix + "'");
    if (covs.empty())
        throw parse_error("panel input needs at least one covariate column");

    PanelData panel;
    const Eigen::Index n = table.values.rows();
    panel.y.resize(n, static_cast<Eigen::Index>(resp.size()));
    panel.x.resize(n, static_cast<Eigen::Index>(covs.size()));
    for (std::size_t j = 0; j < resp.size(); ++j)
        panel.y.col(static_cast<Eigen::Index>(j)) = table.values.col(resp[j]);
    for (std::size_t j = 0; j < covs.size(); ++j)
        panel.x.col(static_cast<Eigen::Index>(j)) = table.values.col(covs[j]);
    panel.validate();
    return panel;
}

void save_dataset(const Dataset& data, std::ostream& os, const std::string& response) {
    os << response;
    for (Eigen::Index j = 0; j < data.d(); ++j) os << ",x" << (j + 1);
    os << '\n';
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        os << format_full(data.y(i));
        for (Eigen::Index j = 0; j < data.d(); ++j) os << ',' << format_full(data.x(i, j));
        os << '\n';
    }
}

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace huberboot
