#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wb/errors.hpp"

namespace wb {

// Atomic file write: temp file in the same directory, then rename.
inline void write_file_atomic(const std::string& path, const std::string& body) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InvalidInput("write_file_atomic: cannot open " + tmp);
        out << body;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw InvalidInput("write_file_atomic: rename failed for " + path);
}

struct LogisticDataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd y; // mapped to {-1,+1}
    bool standardized = false;
};

// Logistic data ingestion: first column the label (-1/+1 or 0/1,
// auto-mapped), remaining columns features. Optionally standardizes each
// feature column to zero mean and unit standard deviation.
inline LogisticDataset load_logistic_csv(const std::string& path, bool standardize) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("load_logistic_csv: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::vector<double> fields;
        std::string tok;
        bool numeric = true;
        while (std::getline(ss, tok, ',')) {
            try {
                size_t used = 0;
                fields.push_back(std::stod(tok, &used));
                if (used == 0) numeric = false;
            } catch (...) {
                numeric = false;
                break;
            }
        }
        if (first && !numeric) { // header row
            first = false;
            continue;
        }
        first = false;
        if (!numeric || fields.size() < 2)
            throw InvalidInput("load_logistic_csv: malformed row: " + line);
        rows.push_back(std::move(fields));
    }
    if (rows.empty()) throw InvalidInput("load_logistic_csv: no data rows");
    const int n = static_cast<int>(rows.size());
    const int d = static_cast<int>(rows[0].size()) - 1;
    LogisticDataset ds;
    ds.X.resize(n, d);
    ds.y.resize(n);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(rows[i].size()) != d + 1)
            throw InvalidInput("load_logistic_csv: ragged row");
        const double label = rows[i][0];
        if (label == 1.0) ds.y(i) = 1.0;
        else if (label == -1.0 || label == 0.0) ds.y(i) = -1.0;
        else throw InvalidInput("load_logistic_csv: label must be -1/+1 or 0/1");
        for (int j = 0; j < d; ++j) ds.X(i, j) = rows[i][j + 1];
    }
    if (standardize) {
        for (int j = 0; j < d; ++j) {
            const double mean = ds.X.col(j).mean();
            const double sd = std::sqrt((ds.X.col(j).array() - mean).square().sum() /
                                        std::max(1, n - 1));
            ds.X.col(j).array() -= mean;
            if (sd > 0.0) ds.X.col(j) /= sd;
        }
        ds.standardized = true;
    }
    return ds;
}

} // namespace wb
