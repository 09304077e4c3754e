#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "attnrec/dataio.hpp"
#include "support/synthetic.hpp"

using namespace attnrec;
namespace fs = std::filesystem;

TEST_CASE("parse_ratings: canonical line") {
    std::istringstream in("196\t242\t3\t881250949\n");
    RatingData data = parse_ratings(in);
    REQUIRE(data.triplets.size() == 1);
    REQUIRE(data.triplets[0].user_id == 196);
    REQUIRE(data.triplets[0].movie_id == 242);
    REQUIRE(data.triplets[0].rating == 3);
    REQUIRE(data.triplets[0].timestamp == 881250949);
}

TEST_CASE("parse_ratings: empty file keeps fixed entity counts") {
    std::istringstream in("");
    RatingData data = parse_ratings(in);
    REQUIRE(data.triplets.empty());
    REQUIRE(data.n_users == 943);
    REQUIRE(data.n_movies == 1682);
}

TEST_CASE("parse_ratings: rejects bad rows with line numbers") {
    {
        std::istringstream in("1\t1\t9\t0\n");
        REQUIRE_THROWS_WITH(parse_ratings(in),
                            Catch::Matchers::ContainsSubstring("rating out of range") &&
                                Catch::Matchers::ContainsSubstring("line 1"));
    }
    {
        std::istringstream in("1\t1\t3\n");
        REQUIRE_THROWS_WITH(parse_ratings(in), Catch::Matchers::ContainsSubstring("field count"));
    }
    {
        std::istringstream in("1\tx\t3\t0\n");
        REQUIRE_THROWS_AS(parse_ratings(in), ParseError);
    }
    {
        std::istringstream in("1\t1\t3\t0\n2\t1\t4\t0\n1\t1\t5\t0\n");
        REQUIRE_THROWS_WITH(parse_ratings(in),
                            Catch::Matchers::ContainsSubstring("duplicate") &&
                                Catch::Matchers::ContainsSubstring("line 3"));
    }
    {
        std::istringstream in("944\t1\t3\t0\n");
        REQUIRE_THROWS_WITH(parse_ratings(in),
                            Catch::Matchers::ContainsSubstring("user id out of range"));
    }
}

TEST_CASE("parse_users: canonical line and error cases") {
    const auto& occ = testsupport::ml100k_occupations();
    {
        std::istringstream in("1|24|M|technician|85711\n");
        auto users = parse_users(in, occ);
        REQUIRE(users.size() == 1);
        REQUIRE(users[0].user_id == 1);
        REQUIRE(users[0].age == 24);
        REQUIRE(users[0].gender == 'M');
        REQUIRE(users[0].occupation == "technician");
        REQUIRE(users[0].zip == "85711");
    }
    {
        std::istringstream in("1|24|M|technician\n");
        REQUIRE_THROWS_WITH(parse_users(in, occ),
                            Catch::Matchers::ContainsSubstring("field count"));
    }
    {
        std::istringstream in("5|0|F|other|00000\n");
        REQUIRE_THROWS_WITH(parse_users(in, occ),
                            Catch::Matchers::ContainsSubstring("age out of range"));
    }
    {
        std::istringstream in("5|33|X|other|00000\n");
        REQUIRE_THROWS_WITH(parse_users(in, occ), Catch::Matchers::ContainsSubstring("gender"));
    }
    {
        std::istringstream in("5|33|F|astronaut|00000\n");
        REQUIRE_THROWS_WITH(parse_users(in, occ),
                            Catch::Matchers::ContainsSubstring("unknown occupation"));
    }
}

TEST_CASE("parse_items: dates, missing years, flag validation") {
    const std::string flags18 = "0|0|0|1|1|1|0|0|0|0|0|0|0|0|0|0|0|0";
    {
        std::istringstream in("1|Toy Story (1995)|01-Jan-1995||http://x|" + flags18 + "|0\n");
        auto movies = parse_items(in);
        REQUIRE(movies.size() == 1);
        REQUIRE(movies[0].title == "Toy Story (1995)");
        REQUIRE(movies[0].release_year.has_value());
        REQUIRE(*movies[0].release_year == 1995);
        REQUIRE(movies[0].genre_flags.size() == 19);
        REQUIRE(movies[0].genre_flags[3] == 1);
    }
    {
        std::istringstream in("2|No Date Movie|||http://x|" + flags18 + "|0\n");
        auto movies = parse_items(in);
        REQUIRE_FALSE(movies[0].release_year.has_value());
    }
    {
        // only 18 genre flags
        std::istringstream in("3|Short|01-Jan-1990||http://x|" + flags18 + "\n");
        REQUIRE_THROWS_WITH(parse_items(in),
                            Catch::Matchers::ContainsSubstring("genre flag count"));
    }
    {
        std::istringstream in("4|Bad Flag|01-Jan-1990||http://x|" + flags18 + "|2\n");
        REQUIRE_THROWS_WITH(parse_items(in),
                            Catch::Matchers::ContainsSubstring("genre flag not in {0,1}"));
    }
}

TEST_CASE("parse_items: latin-1 title bytes pass through untouched") {
    const std::string title = "Les Mis\xE9rables (1995)";  // 0xE9 = e-acute in latin-1
    std::string flags = "1";
    for (int i = 1; i < 19; ++i) flags += "|0";
    std::istringstream in("9|" + title + "|01-Jan-1995||http://x|" + flags + "\n");
    auto movies = parse_items(in);
    REQUIRE(movies[0].title == title);
}

TEST_CASE("synthetic fixture: round-trip, split sizes, disjointness, density") {
    const fs::path dir = testsupport::shared_synthetic_dir();

    RatingData all = parse_ratings((dir / "u.data").string());
    REQUIRE(all.triplets.size() == 8000);

    // parse -> serialize reproduces the file byte for byte
    std::ostringstream rt;
    serialize_ratings(all, rt);
    std::ifstream orig(dir / "u.data", std::ios::binary);
    std::stringstream orig_bytes;
    orig_bytes << orig.rdbuf();
    REQUIRE(rt.str() == orig_bytes.str());

    auto [train, test] = load_split(dir.string(), "u1");
    REQUIRE(train.triplets.size() + test.triplets.size() == all.triplets.size());
    REQUIRE(test.triplets.size() == all.triplets.size() / 5);

    std::set<std::pair<int, int>> train_pairs, test_pairs;
    for (const auto& t : train.triplets) train_pairs.emplace(t.user_id, t.movie_id);
    for (const auto& t : test.triplets) test_pairs.emplace(t.user_id, t.movie_id);
    std::vector<std::pair<int, int>> inter;
    std::set_intersection(train_pairs.begin(), train_pairs.end(), test_pairs.begin(),
                          test_pairs.end(), std::back_inserter(inter));
    REQUIRE(inter.empty());

    REQUIRE(all.density() == Catch::Approx(8000.0 / (943.0 * 1682.0)));
}

TEST_CASE("load_split: unknown fold reports missing file") {
    const fs::path dir = testsupport::shared_synthetic_dir();
    REQUIRE_THROWS_WITH(load_split(dir.string(), "u9"),
                        Catch::Matchers::ContainsSubstring("missing file"));
}

TEST_CASE("vocabulary files parse in order") {
    const fs::path dir = testsupport::shared_synthetic_dir();
    auto occ = parse_occupations((dir / "u.occupation").string());
    REQUIRE(occ.size() == 21);
    REQUIRE(occ.front() == "administrator");
    REQUIRE(occ.back() == "writer");
    auto genres = parse_genres((dir / "u.genre").string());
    REQUIRE(genres.size() == 19);
    REQUIRE(genres.front() == "unknown");
    REQUIRE(genres.back() == "Western");
}

TEST_CASE("full synthetic user/item files parse with fixed counts") {
    const fs::path dir = testsupport::shared_synthetic_dir();
    auto occ = parse_occupations((dir / "u.occupation").string());
    auto users = parse_users((dir / "u.user").string(), occ);
    REQUIRE(users.size() == 943);
    for (std::size_t i = 0; i < users.size(); ++i)
        REQUIRE(users[i].user_id == static_cast<int>(i) + 1);
    auto movies = parse_items((dir / "u.item").string());
    REQUIRE(movies.size() == 1682);
    // fixture plants empty dates on every 40th movie
    REQUIRE_FALSE(movies[39].release_year.has_value());
    REQUIRE(movies[0].release_year.has_value());
}
