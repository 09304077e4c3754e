#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "attnrec/errors.hpp"

namespace attnrec {

// Entity counts are fixed by the ML-100K distribution so the rating matrix
// keeps its shape regardless of which split file is loaded.
constexpr int kNumUsers = 943;
constexpr int kNumMovies = 1682;
constexpr int kNumGenres = 19;

struct RatingTriplet {
    int user_id = 0;   // 1-based
    int movie_id = 0;  // 1-based
    int rating = 0;    // 1..5
    long long timestamp = 0;
};

struct RatingData {
    std::vector<RatingTriplet> triplets;
    int n_users = kNumUsers;
    int n_movies = kNumMovies;

    double density() const {
        return static_cast<double>(triplets.size()) /
               (static_cast<double>(n_users) * static_cast<double>(n_movies));
    }
};

struct UserRecord {
    int user_id = 0;
    int age = 0;
    char gender = 'M';  // 'M' or 'F'
    std::string occupation;
    std::string zip;  // parsed, unused downstream
};

struct MovieRecord {
    int movie_id = 0;
    std::string title;  // Latin-1 bytes passed through untouched
    std::optional<int> release_year;
    std::vector<int> genre_flags;  // exactly 19 entries, each 0 or 1
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline long long parse_int_field(const std::string& s, const std::string& what,
                                 std::size_t line_no) {
    if (s.empty())
        throw ParseError(what + ": empty integer field at line " + std::to_string(line_no));
    std::size_t idx = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &idx);
    } catch (const std::exception&) {
        throw ParseError(what + ": non-integer field '" + s + "' at line " +
                         std::to_string(line_no));
    }
    if (idx != s.size())
        throw ParseError(what + ": non-integer field '" + s + "' at line " +
                         std::to_string(line_no));
    return v;
}

inline std::string chomp(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

inline std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("missing file: cannot open '" + path + "'");
    return in;
}

}  // namespace detail

// Tab-separated `user_id \t movie_id \t rating \t timestamp`, one triplet per
// non-empty line. Counts stay fixed at 943 x 1682 for every split file.
inline RatingData parse_ratings(std::istream& in, const std::string& source = "<stream>") {
    RatingData data;
    std::unordered_set<std::uint32_t> seen;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = detail::chomp(raw);
        if (line.empty()) continue;
        const auto f = detail::split_fields(line, '\t');
        if (f.size() != 4)
            throw ParseError(source + ": field count (expected 4, got " +
                             std::to_string(f.size()) + ") at line " + std::to_string(line_no));
        RatingTriplet t;
        t.user_id = static_cast<int>(detail::parse_int_field(f[0], source, line_no));
        t.movie_id = static_cast<int>(detail::parse_int_field(f[1], source, line_no));
        t.rating = static_cast<int>(detail::parse_int_field(f[2], source, line_no));
        t.timestamp = detail::parse_int_field(f[3], source, line_no);
        if (t.user_id < 1 || t.user_id > kNumUsers)
            throw ParseError(source + ": user id out of range at line " + std::to_string(line_no));
        if (t.movie_id < 1 || t.movie_id > kNumMovies)
            throw ParseError(source + ": movie id out of range at line " + std::to_string(line_no));
        if (t.rating < 1 || t.rating > 5)
            throw ParseError(source + ": rating out of range at line " + std::to_string(line_no));
        const std::uint32_t key =
            (static_cast<std::uint32_t>(t.user_id) << 16) | static_cast<std::uint32_t>(t.movie_id);
        if (!seen.insert(key).second)
            throw ParseError(source + ": duplicate (user, movie) pair at line " +
                             std::to_string(line_no));
        data.triplets.push_back(t);
    }
    return data;
}

inline RatingData parse_ratings(const std::string& path) {
    auto in = detail::open_or_throw(path);
    return parse_ratings(in, path);
}

// Re-emit the triplet file exactly (modulo trailing newline normalization).
inline void serialize_ratings(const RatingData& data, std::ostream& out) {
    for (const auto& t : data.triplets)
        out << t.user_id << '\t' << t.movie_id << '\t' << t.rating << '\t' << t.timestamp << '\n';
}

// One occupation name per line (the u.occupation file).
inline std::vector<std::string> parse_occupations(const std::string& path) {
    auto in = detail::open_or_throw(path);
    std::vector<std::string> out;
    std::string raw;
    while (std::getline(in, raw)) {
        const std::string line = detail::chomp(raw);
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

// `name|id` per line (the u.genre file); names returned in file order.
inline std::vector<std::string> parse_genres(const std::string& path) {
    auto in = detail::open_or_throw(path);
    std::vector<std::string> out;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = detail::chomp(raw);
        if (line.empty()) continue;
        const auto f = detail::split_fields(line, '|');
        if (f.empty() || f[0].empty())
            throw ParseError(path + ": empty genre name at line " + std::to_string(line_no));
        out.push_back(f[0]);
    }
    return out;
}

// Pipe-separated `user_id|age|gender|occupation|zip`.
inline std::vector<UserRecord> parse_users(std::istream& in,
                                           const std::vector<std::string>& occupations,
                                           const std::string& source = "<stream>") {
    std::unordered_set<std::string> vocab(occupations.begin(), occupations.end());
    std::vector<UserRecord> out;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = detail::chomp(raw);
        if (line.empty()) continue;
        const auto f = detail::split_fields(line, '|');
        if (f.size() != 5)
            throw ParseError(source + ": field count (expected 5, got " +
                             std::to_string(f.size()) + ") at line " + std::to_string(line_no));
        UserRecord u;
        u.user_id = static_cast<int>(detail::parse_int_field(f[0], source, line_no));
        u.age = static_cast<int>(detail::parse_int_field(f[1], source, line_no));
        if (u.age <= 0)
            throw ParseError(source + ": age out of range at line " + std::to_string(line_no));
        if (f[2] != "M" && f[2] != "F")
            throw ParseError(source + ": gender not in {M,F} at line " + std::to_string(line_no));
        u.gender = f[2][0];
        if (vocab.find(f[3]) == vocab.end())
            throw ParseError(source + ": unknown occupation '" + f[3] + "' at line " +
                             std::to_string(line_no));
        u.occupation = f[3];
        u.zip = f[4];
        out.push_back(u);
    }
    return out;
}

inline std::vector<UserRecord> parse_users(const std::string& path,
                                           const std::vector<std::string>& occupations) {
    auto in = detail::open_or_throw(path);
    return parse_users(in, occupations, path);
}

// Pipe-separated `movie_id|title|release_date|video_release_date|imdb_url|`
// plus 19 binary genre flags. release_date is `DD-Mon-YYYY` or empty.
inline std::vector<MovieRecord> parse_items(std::istream& in,
                                            const std::string& source = "<stream>") {
    std::vector<MovieRecord> out;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = detail::chomp(raw);
        if (line.empty()) continue;
        const auto f = detail::split_fields(line, '|');
        if (f.size() != 5 + kNumGenres)
            throw ParseError(source + ": genre flag count (expected " +
                             std::to_string(5 + kNumGenres) + " fields, got " +
                             std::to_string(f.size()) + ") at line " + std::to_string(line_no));
        MovieRecord m;
        m.movie_id = static_cast<int>(detail::parse_int_field(f[0], source, line_no));
        m.title = f[1];
        if (!f[2].empty()) {
            const std::size_t dash = f[2].rfind('-');
            if (dash == std::string::npos || dash + 1 >= f[2].size())
                throw ParseError(source + ": malformed release date '" + f[2] + "' at line " +
                                 std::to_string(line_no));
            m.release_year =
                static_cast<int>(detail::parse_int_field(f[2].substr(dash + 1), source, line_no));
        }
        m.genre_flags.reserve(kNumGenres);
        for (int g = 0; g < kNumGenres; ++g) {
            const std::string& flag = f[5 + static_cast<std::size_t>(g)];
            if (flag != "0" && flag != "1")
                throw ParseError(source + ": genre flag not in {0,1} at line " +
                                 std::to_string(line_no));
            m.genre_flags.push_back(flag == "1" ? 1 : 0);
        }
        out.push_back(m);
    }
    return out;
}

inline std::vector<MovieRecord> parse_items(const std::string& path) {
    auto in = detail::open_or_throw(path);
    return parse_items(in, path);
}

// Loads `<name>.base` / `<name>.test` for a fold in u1..u5.
inline std::pair<RatingData, RatingData> load_split(const std::string& dir,
                                                    const std::string& name) {
    const std::string base_path = dir + "/" + name + ".base";
    const std::string test_path = dir + "/" + name + ".test";
    return {parse_ratings(base_path), parse_ratings(test_path)};
}

}  // namespace attnrec
