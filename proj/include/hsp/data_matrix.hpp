#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "hsp/error.hpp"

namespace hsp {

/// Condition-by-subject matrix of summary values: rows are the I conditions,
/// columns the J subjects. Stored column-major so a subject's values are
/// contiguous.
struct DataMatrix {
    int n_conditions = 0;
    int n_subjects = 0;
    std::vector<double> values; // values[i + I*j]
    std::vector<std::string> condition_names;
    std::vector<std::string> subject_names;
    bool standardized = false;

    DataMatrix() = default;
    DataMatrix(int conditions, int subjects)
        : n_conditions(conditions),
          n_subjects(subjects),
          values(static_cast<std::size_t>(conditions) * static_cast<std::size_t>(subjects), 0.0) {
        condition_names.reserve(static_cast<std::size_t>(conditions));
        subject_names.reserve(static_cast<std::size_t>(subjects));
        for (int i = 0; i < conditions; ++i) condition_names.push_back("C" + std::to_string(i + 1));
        for (int j = 0; j < subjects; ++j) subject_names.push_back("S" + std::to_string(j + 1));
    }

    double operator()(int condition, int subject) const {
        return values[static_cast<std::size_t>(condition) + static_cast<std::size_t>(n_conditions) * static_cast<std::size_t>(subject)];
    }
    double& operator()(int condition, int subject) {
        return values[static_cast<std::size_t>(condition) + static_cast<std::size_t>(n_conditions) * static_cast<std::size_t>(subject)];
    }

    const double* column(int subject) const {
        return values.data() + static_cast<std::size_t>(n_conditions) * static_cast<std::size_t>(subject);
    }
};

/// Standardize every subject column to zero mean and unit sample variance.
/// A column without at least two distinct values is unusable and reported by
/// subject name.
inline DataMatrix standardize(const DataMatrix& data) {
    DataMatrix out = data;
    const int I = data.n_conditions;
    if (I < 2) throw DegenerateDataError("standardize: need at least two conditions per subject");
    for (int j = 0; j < data.n_subjects; ++j) {
        const double* col = data.column(j);
        double mean = 0.0;
        for (int i = 0; i < I; ++i) mean += col[i];
        mean /= static_cast<double>(I);
        double ss = 0.0;
        bool distinct = false;
        for (int i = 0; i < I; ++i) {
            ss += (col[i] - mean) * (col[i] - mean);
            if (col[i] != col[0]) distinct = true;
        }
        if (!distinct)
            throw DegenerateDataError("standardize: subject '" + data.subject_names[static_cast<std::size_t>(j)] +
                                      "' has a constant column");
        const double sd = std::sqrt(ss / static_cast<double>(I - 1));
        for (int i = 0; i < I; ++i) out(i, j) = (col[i] - mean) / sd;
    }
    out.standardized = true;
    return out;
}

} // namespace hsp
