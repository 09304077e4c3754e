#pragma once

// Deterministic MovieLens-100K-format fixture: full 943x1682 id space, planted
// low-rank rating structure, every file of the on-disk layout. Lets the whole
// pipeline run end to end where the real dataset is not available.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "attnrec/dataio.hpp"
#include "attnrec/features.hpp"
#include "attnrec/rng.hpp"

namespace testsupport {

inline const std::vector<std::string>& ml100k_occupations() {
    static const std::vector<std::string> v = {
        "administrator", "artist",     "doctor",    "educator",  "engineer", "entertainment",
        "executive",     "healthcare", "homemaker", "lawyer",    "librarian", "marketing",
        "none",          "other",      "programmer", "retired",  "salesman", "scientist",
        "student",       "technician", "writer"};
    return v;
}

inline const std::vector<std::string>& ml100k_genres() {
    static const std::vector<std::string> v = {
        "unknown", "Action",  "Adventure", "Animation", "Children's", "Comedy", "Crime",
        "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror", "Musical", "Mystery",
        "Romance", "Sci-Fi", "Thriller", "War", "Western"};
    return v;
}

struct SyntheticSpec {
    std::size_t n_ratings = 8000;
    std::uint64_t seed = 7;
};

// Writes u.data, u.user, u.item, u.occupation, u.genre, u1.base, u1.test
// under dir. The base/test split mirrors the distribution's recipe: the first
// 20% of u.data lines become the test fold, both files sorted by (user, movie).
inline void write_synthetic_ml100k(const std::filesystem::path& dir,
                                   const SyntheticSpec& spec = {}) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    attnrec::Rng rng(attnrec::derive_seed(spec.seed, "synthetic-ml100k"));

    {
        std::ofstream out(dir / "u.occupation", std::ios::binary);
        for (const auto& o : ml100k_occupations()) out << o << "\n";
    }
    {
        std::ofstream out(dir / "u.genre", std::ios::binary);
        const auto& genres = ml100k_genres();
        for (std::size_t g = 0; g < genres.size(); ++g) out << genres[g] << "|" << g << "\n";
    }
    {
        std::ofstream out(dir / "u.user", std::ios::binary);
        const auto& occ = ml100k_occupations();
        for (int u = 1; u <= attnrec::kNumUsers; ++u) {
            const int age = 7 + static_cast<int>(rng.below(64));
            const char gender = rng.below(2) ? 'M' : 'F';
            char zip[8];
            std::snprintf(zip, sizeof zip, "%05d", static_cast<int>(rng.below(100000)));
            out << u << "|" << age << "|" << gender << "|" << occ[rng.below(occ.size())] << "|"
                << zip << "\n";
        }
    }
    {
        std::ofstream out(dir / "u.item", std::ios::binary);
        const auto& genres = ml100k_genres();
        for (int m = 1; m <= attnrec::kNumMovies; ++m) {
            const bool has_year = m % 40 != 0;
            const int year = 1930 + static_cast<int>(rng.below(69));
            std::vector<int> flags(genres.size(), 0);
            flags[1 + rng.below(genres.size() - 1)] = 1;
            if (rng.below(3) == 0) flags[1 + rng.below(genres.size() - 1)] = 1;
            out << m << "|Movie " << m;
            if (has_year)
                out << " (" << year << ")|01-Jan-" << year << "|";
            else
                out << "|" << "|";
            out << "|http://example.test/movie/" << m << "|";
            for (std::size_t g = 0; g < flags.size(); ++g)
                out << flags[g] << (g + 1 < flags.size() ? "|" : "");
            out << "\n";
        }
    }

    // Planted factors keep the completion task learnable.
    const int k = 4;
    std::vector<double> uf(static_cast<std::size_t>(attnrec::kNumUsers) * k);
    std::vector<double> mf(static_cast<std::size_t>(attnrec::kNumMovies) * k);
    for (double& v : uf) v = rng.uniform(-0.7, 0.7);
    for (double& v : mf) v = rng.uniform(-0.7, 0.7);

    std::vector<attnrec::RatingTriplet> triplets;
    triplets.reserve(spec.n_ratings);
    std::unordered_set<std::uint32_t> seen;
    while (triplets.size() < spec.n_ratings) {
        const int u = 1 + static_cast<int>(rng.below(attnrec::kNumUsers));
        const int m = 1 + static_cast<int>(rng.below(attnrec::kNumMovies));
        const auto key =
            (static_cast<std::uint32_t>(u) << 16) | static_cast<std::uint32_t>(m);
        if (!seen.insert(key).second) continue;
        double dot = 0.0;
        for (int j = 0; j < k; ++j)
            dot += uf[static_cast<std::size_t>(u - 1) * k + j] *
                   mf[static_cast<std::size_t>(m - 1) * k + j];
        const double noisy = 3.5 + 2.2 * dot + rng.uniform(-0.9, 0.9);
        int rating = static_cast<int>(noisy + 0.5);
        rating = std::max(1, std::min(5, rating));
        triplets.push_back({u, m, rating, 874000000 + static_cast<long long>(rng.below(20000000))});
    }

    {
        std::ofstream out(dir / "u.data", std::ios::binary);
        attnrec::RatingData all;
        all.triplets = triplets;
        attnrec::serialize_ratings(all, out);
    }

    const std::size_t n_test = spec.n_ratings / 5;
    auto by_pair = [](const attnrec::RatingTriplet& a, const attnrec::RatingTriplet& b) {
        return a.user_id != b.user_id ? a.user_id < b.user_id : a.movie_id < b.movie_id;
    };
    std::vector<attnrec::RatingTriplet> test(triplets.begin(),
                                             triplets.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<attnrec::RatingTriplet> base(triplets.begin() + static_cast<std::ptrdiff_t>(n_test),
                                             triplets.end());
    std::sort(test.begin(), test.end(), by_pair);
    std::sort(base.begin(), base.end(), by_pair);
    {
        std::ofstream out(dir / "u1.base", std::ios::binary);
        attnrec::RatingData d;
        d.triplets = base;
        attnrec::serialize_ratings(d, out);
    }
    {
        std::ofstream out(dir / "u1.test", std::ios::binary);
        attnrec::RatingData d;
        d.triplets = test;
        attnrec::serialize_ratings(d, out);
    }
}

// Cached shared fixture for the test binaries; generated once per process.
inline std::filesystem::path shared_synthetic_dir(std::size_t n_ratings = 8000,
                                                  std::uint64_t seed = 7) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() /
                         ("attnrec_synth_" + std::to_string(n_ratings) + "_" +
                          std::to_string(seed));
    if (!fs::exists(dir / "u1.base")) write_synthetic_ml100k(dir, {n_ratings, seed});
    return dir;
}

// Small in-memory rating set for unit-scale model tests.
inline attnrec::RatingData make_tiny_ratings(int n_users, int n_movies, std::size_t n,
                                             std::uint64_t seed) {
    attnrec::RatingData data;
    data.n_users = n_users;
    data.n_movies = n_movies;
    attnrec::Rng rng(attnrec::derive_seed(seed, "tiny-ratings"));
    std::unordered_set<std::uint32_t> seen;
    while (data.triplets.size() < n) {
        const int u = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_users)));
        const int m = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_movies)));
        const auto key =
            (static_cast<std::uint32_t>(u) << 16) | static_cast<std::uint32_t>(m);
        if (!seen.insert(key).second) continue;
        data.triplets.push_back({u, m, 1 + static_cast<int>(rng.below(5)), 0});
    }
    return data;
}

// Random one-hot-ish feature matrix: block of exclusive categories plus a few
// free binary flags, mirroring the real feature shapes at small scale.
inline attnrec::FeatureMatrix make_tiny_features(std::size_t rows, std::size_t n_cat,
                                                 std::size_t n_flags, std::uint64_t seed) {
    attnrec::FeatureMatrix fm;
    for (std::size_t c = 0; c < n_cat; ++c) fm.column_labels.push_back("cat_" + std::to_string(c));
    for (std::size_t f = 0; f < n_flags; ++f)
        fm.column_labels.push_back("flag_" + std::to_string(f));
    fm.values = attnrec::Matrix(rows, n_cat + n_flags);
    attnrec::Rng rng(attnrec::derive_seed(seed, "tiny-features"));
    for (std::size_t i = 0; i < rows; ++i) {
        fm.values(i, rng.below(n_cat)) = 1.0;
        for (std::size_t f = 0; f < n_flags; ++f)
            if (rng.below(2)) fm.values(i, n_cat + f) = 1.0;
    }
    return fm;
}

}  // namespace testsupport
