#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hsmc/linalg.hpp"

namespace hsmc {

enum class DataFormat { auto_detect, csv, binary };

namespace detail {

inline bool parse_double(std::string_view cell, double& out) {
    // trim spaces and a possible trailing CR
    std::size_t b = cell.find_first_not_of(" \t\r");
    std::size_t e = cell.find_last_not_of(" \t\r");
    if (b == std::string_view::npos) return false;
    cell = cell.substr(b, e - b + 1);
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return res.ec == std::errc() && res.ptr == cell.data() + cell.size();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

} // namespace detail

// Comma-separated numeric table; one optional header row is auto-detected (a
// first row with any non-numeric cell) and skipped.
inline Eigen::MatrixXd load_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    bool header_checked = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = detail::split_csv_line(line);
        std::vector<double> row(cells.size());
        bool all_numeric = true;
        std::size_t bad_col = 0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (!detail::parse_double(cells[c], row[c])) {
                all_numeric = false;
                bad_col = c;
                break;
            }
        }
        if (!header_checked) {
            header_checked = true;
            if (!all_numeric) continue;  // header row
        }
        if (!all_numeric) {
            std::ostringstream msg;
            msg << path << ": row " << lineno << " column " << bad_col + 1 << ": '"
                << cells[bad_col] << "' is not numeric";
            throw data_error(msg.str());
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            std::ostringstream msg;
            msg << path << ": row " << lineno << " has " << row.size() << " cells, expected "
                << rows.front().size();
            throw data_error(msg.str());
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw data_error(path + ": no numeric rows");
    Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j)
            M(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return M;
}

inline void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& M,
                             const std::vector<std::string>& colnames = {}) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    if (!colnames.empty()) {
        for (std::size_t j = 0; j < colnames.size(); ++j)
            out << (j ? "," : "") << colnames[j];
        out << "\n";
    }
    char buf[32];
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", M(i, j));
            out << (j ? "," : "") << buf;
        }
        out << "\n";
    }
    if (!out) throw data_error("write failed on " + path);
}

// Raw binary layout: two little-endian u64 dims, then row-major f64 payload.
inline void write_matrix_bin(const std::string& path, const Eigen::MatrixXd& M) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write " + path);
    const std::uint64_t dims[2] = {static_cast<std::uint64_t>(M.rows()),
                                   static_cast<std::uint64_t>(M.cols())};
    out.write(reinterpret_cast<const char*>(dims), sizeof dims);
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const RowMajor R = M;
    out.write(reinterpret_cast<const char*>(R.data()),
              static_cast<std::streamsize>(sizeof(double)) * R.size());
    if (!out) throw data_error("write failed on " + path);
}

inline Eigen::MatrixXd load_matrix_bin(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open " + path);
    std::uint64_t dims[2];
    in.read(reinterpret_cast<char*>(dims), sizeof dims);
    if (!in) throw data_error(path + ": truncated header");
    if (dims[0] == 0 || dims[1] == 0 || dims[0] > (1ull << 32) || dims[1] > (1ull << 32))
        throw data_error(path + ": implausible dimensions in header");
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMajor R(static_cast<Eigen::Index>(dims[0]), static_cast<Eigen::Index>(dims[1]));
    in.read(reinterpret_cast<char*>(R.data()),
            static_cast<std::streamsize>(sizeof(double)) * R.size());
    if (!in) throw data_error(path + ": truncated payload");
    return R;
}

inline DataFormat detect_format(const std::string& path) {
    return path.size() > 4 && path.substr(path.size() - 4) == ".bin" ? DataFormat::binary
                                                                     : DataFormat::csv;
}

// Design + response pair from disk.
inline ModelData load_data(const std::string& design_path, const std::string& response_path,
                           DataFormat format = DataFormat::auto_detect) {
    const DataFormat fmt_design =
        format == DataFormat::auto_detect ? detect_format(design_path) : format;
    const DataFormat fmt_response =
        format == DataFormat::auto_detect ? detect_format(response_path) : format;
    ModelData data;
    data.W = fmt_design == DataFormat::binary ? load_matrix_bin(design_path)
                                              : load_matrix_csv(design_path);
    Eigen::MatrixXd zmat = fmt_response == DataFormat::binary ? load_matrix_bin(response_path)
                                                              : load_matrix_csv(response_path);
    if (zmat.cols() != 1) throw data_error(response_path + ": response must be a single column");
    data.z = zmat.col(0);
    data.validate();
    return data;
}

} // namespace hsmc
