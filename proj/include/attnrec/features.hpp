#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "attnrec/dataio.hpp"
#include "attnrec/matrix.hpp"

namespace attnrec {

// Age bucket edges (0, 12, 18, 30, 50, 90]: five left-open right-closed bins.
// Ages above the last edge clamp into the last bucket.
inline int bin_age(int age) {
    if (age <= 0) throw DomainError("bin_age: age out of range: " + std::to_string(age));
    static constexpr int edges[] = {0, 12, 18, 30, 50, 90};
    for (int k = 0; k < 5; ++k)
        if (age > edges[k] && age <= edges[k + 1]) return k;
    return 4;  // age > 90
}

// Release-year edges (1920, 1940, 1960, 1980, 2000]: four bins, clamped at
// both ends; an absent year stays absent (all-zero block downstream).
inline std::optional<int> bin_year(std::optional<int> year) {
    if (!year) return std::nullopt;
    static constexpr int edges[] = {1920, 1940, 1960, 1980, 2000};
    if (*year <= edges[0]) return 0;
    for (int k = 0; k < 4; ++k)
        if (*year > edges[k] && *year <= edges[k + 1]) return k;
    return 3;  // year > 2000
}

struct FeatureMatrix {
    Matrix values;  // dense 0/1 entries
    std::vector<std::string> column_labels;

    std::size_t rows() const { return values.rows; }
    std::size_t cols() const { return values.cols; }
};

struct FeatureOptions {
    // When true, an extra year column marks movies with no release date
    // instead of leaving the year block all zero.
    bool year_unknown_column = false;
};

// One row per user in user_id order: 5 age + 2 gender + |occupations| columns,
// exactly one 1 per block.
inline FeatureMatrix encode_users(const std::vector<UserRecord>& users,
                                  const std::vector<std::string>& occupations) {
    FeatureMatrix fm;
    fm.column_labels = {"age_bin_0", "age_bin_1", "age_bin_2", "age_bin_3", "age_bin_4",
                        "gender_M", "gender_F"};
    for (const auto& occ : occupations) fm.column_labels.push_back("occ_" + occ);
    const std::size_t d = fm.column_labels.size();
    fm.values = Matrix(users.size(), d);
    for (std::size_t i = 0; i < users.size(); ++i) {
        const auto& u = users[i];
        fm.values(i, static_cast<std::size_t>(bin_age(u.age))) = 1.0;
        fm.values(i, u.gender == 'M' ? 5 : 6) = 1.0;
        std::size_t occ_idx = occupations.size();
        for (std::size_t k = 0; k < occupations.size(); ++k)
            if (occupations[k] == u.occupation) {
                occ_idx = k;
                break;
            }
        if (occ_idx == occupations.size())
            throw DomainError("encode_users: occupation '" + u.occupation +
                              "' not in vocabulary");
        fm.values(i, 7 + occ_idx) = 1.0;
    }
    return fm;
}

// One row per movie in movie_id order: 4 year columns (plus an optional
// unknown-year column) followed by the genre flags copied verbatim.
inline FeatureMatrix encode_items(const std::vector<MovieRecord>& movies,
                                  const std::vector<std::string>& genres,
                                  const FeatureOptions& opts = {}) {
    FeatureMatrix fm;
    fm.column_labels = {"year_bin_0", "year_bin_1", "year_bin_2", "year_bin_3"};
    if (opts.year_unknown_column) fm.column_labels.push_back("year_unknown");
    const std::size_t genre_base = fm.column_labels.size();
    for (const auto& g : genres) fm.column_labels.push_back("genre_" + g);
    fm.values = Matrix(movies.size(), fm.column_labels.size());
    for (std::size_t i = 0; i < movies.size(); ++i) {
        const auto& m = movies[i];
        if (auto b = bin_year(m.release_year))
            fm.values(i, static_cast<std::size_t>(*b)) = 1.0;
        else if (opts.year_unknown_column)
            fm.values(i, 4) = 1.0;
        if (m.genre_flags.size() != genres.size())
            throw DimensionError("encode_items: genre flag count " +
                                 std::to_string(m.genre_flags.size()) + " vs vocabulary " +
                                 std::to_string(genres.size()));
        for (std::size_t g = 0; g < genres.size(); ++g)
            fm.values(i, genre_base + g) = static_cast<double>(m.genre_flags[g]);
    }
    return fm;
}

// CSV with a header row of column labels; values written as 0/1 integers.
inline void write_feature_csv(const FeatureMatrix& fm, std::ostream& out) {
    for (std::size_t j = 0; j < fm.column_labels.size(); ++j) {
        if (j) out << ',';
        out << fm.column_labels[j];
    }
    out << '\n';
    for (std::size_t i = 0; i < fm.rows(); ++i) {
        for (std::size_t j = 0; j < fm.cols(); ++j) {
            if (j) out << ',';
            out << static_cast<int>(fm.values(i, j));
        }
        out << '\n';
    }
}

inline void write_feature_csv(const FeatureMatrix& fm, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    write_feature_csv(fm, out);
}

}  // namespace attnrec
