#include "doctest.h"

#include <filesystem>

#include "affect/common.hpp"
#include "affect/data.hpp"
#include "affect/error.hpp"
#include "affect/rng.hpp"
#include "synthetic.hpp"
#include "tempdir.hpp"

using namespace affect;
using namespace affect::data;

namespace {
const std::filesystem::path kFixtures = AFFECT_EXAMPLES_DIR;
}

TEST_CASE("task file with two valid rows") {
    const Dataset d = parse_task_tsv("essay\tempathy\tdistress\nfirst essay\t3\t4\nsecond one\t1.5\t7\n", Split::train);
    REQUIRE(d.records.size() == 2);
    CHECK(d.records[0].id == "0");
    CHECK(d.records[1].id == "1");
    CHECK(*d.records[1].empathy == 1.5);
    CHECK(*d.records[1].distress == 7.0);
    CHECK_FALSE(d.records[0].emotion.has_value());
}

TEST_CASE("out-of-range score names the range and the line") {
    try {
        parse_task_tsv("essay\tempathy\nok\t3\nbad\t8.2\n", Split::train);
        FAIL("expected a row error");
    } catch (const RowError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("[1,7]") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_task_tsv("essay\tdistress\nx\tabc\n", Split::train), RowError);
    CHECK_THROWS_AS(parse_task_tsv("essay\tdistress\nx\t0.99\n", Split::train), RowError);
}

TEST_CASE("boundary scores are accepted") {
    const Dataset d = parse_task_tsv("essay\tempathy\tdistress\nx\t1\t7\n", Split::dev);
    CHECK(*d.records[0].empathy == 1.0);
    CHECK(*d.records[0].distress == 7.0);
}

TEST_CASE("missing header or essay column is a format error") {
    CHECK_THROWS_AS(parse_task_tsv("", Split::train), FormatError);
    CHECK_THROWS_AS(parse_task_tsv("text\tempathy\nx\t2\n", Split::train), FormatError);
    CHECK_THROWS_AS(parse_pool_tsv("text\nabc\n"), FormatError);
}

TEST_CASE("unknown emotion is a row error") {
    CHECK_THROWS_AS(parse_task_tsv("essay\temotion\nx\tglee\n", Split::train), RowError);
    CHECK_THROWS_AS(parse_pool_tsv("text\temotion\nx\tjoy\ny\tpride\n"), RowError);
}

TEST_CASE("fixture task file") {
    const Dataset d = load_task_tsv(kFixtures / "task_small.tsv", Split::train);
    REQUIRE(d.records.size() == 4);
    CHECK(d.records[1].text == "I am furious\tabout this\nreport.");
    CHECK(*d.records[1].emotion == EmotionLabel::anger);
    CHECK(*d.records[3].emotion == EmotionLabel::joy);
    REQUIRE(d.records[0].extras.size() == 2);
    CHECK(d.records[0].extras[0] == std::pair<std::string, std::string>("gender", "1"));
    CHECK(d.records[2].extras[1].second.empty());
}

TEST_CASE("pool fixture") {
    const Dataset d = load_pool_tsv(kFixtures / "pool_small.tsv");
    REQUIRE(d.records.size() == 5);
    CHECK(d.split == Split::pool);
    CHECK(*d.records[1].emotion == EmotionLabel::joy);
    for (const auto& r : d.records) {
        CHECK_FALSE(r.empathy.has_value());
        CHECK_FALSE(r.distress.has_value());
    }
}

TEST_CASE("pool header only yields an empty dataset") {
    CHECK(parse_pool_tsv("text\temotion\n").records.empty());
}

TEST_CASE("CRLF, BOM and a trailing newline are tolerated") {
    const Dataset d = parse_task_tsv("\xEF\xBB\xBFid\tessay\r\na\thello\r\nb\tworld\r\n", Split::train);
    REQUIRE(d.records.size() == 2);
    CHECK(d.records[1].text == "world");
}

TEST_CASE("row errors for field counts, empty text and duplicate ids") {
    CHECK_THROWS_AS(parse_task_tsv("id\tessay\na\tx\tz\n", Split::train), RowError);
    CHECK_THROWS_AS(parse_task_tsv("id\tessay\na\t   \n", Split::train), RowError);
    CHECK_THROWS_AS(parse_task_tsv("id\tessay\na\tx\na\ty\n", Split::train), RowError);
}

TEST_CASE("serialize then load reproduces every field") {
    const Dataset d = load_task_tsv(kFixtures / "task_small.tsv", Split::train);
    const Dataset again = parse_task_tsv(to_tsv(d), Split::train);
    REQUIRE(again.records.size() == d.records.size());
    for (std::size_t i = 0; i < d.records.size(); ++i) {
        CHECK(again.records[i].id == d.records[i].id);
        CHECK(again.records[i].text == d.records[i].text);
        CHECK(again.records[i].empathy == d.records[i].empathy);
        CHECK(again.records[i].distress == d.records[i].distress);
        CHECK(again.records[i].emotion == d.records[i].emotion);
        CHECK(again.records[i].extras == d.records[i].extras);
    }
    CHECK(to_tsv(again) == to_tsv(d));
}

TEST_CASE("round trip over random records with awkward text") {
    Rng rng(42);
    Dataset d;
    const std::string alphabet = "ab \t\n\\.,!";
    for (int i = 0; i < 100; ++i) {
        EssayRecord r;
        r.id = "r" + std::to_string(i);
        r.text = "w";
        for (std::uint64_t k = 0; k < rng.uniform_below(15); ++k) r.text += alphabet[rng.uniform_below(alphabet.size())];
        if (rng.uniform_below(2)) r.empathy = rng.uniform(1.0, 7.0);
        if (rng.uniform_below(2)) r.distress = rng.uniform(1.0, 7.0);
        if (rng.uniform_below(2)) r.emotion = label_from_code(static_cast<int>(rng.uniform_below(7)));
        d.records.push_back(r);
    }
    const Dataset back = parse_task_tsv(to_tsv(d), Split::train);
    REQUIRE(back.records.size() == d.records.size());
    for (std::size_t i = 0; i < d.records.size(); ++i) {
        CHECK(back.records[i].text == d.records[i].text);
        CHECK(back.records[i].empathy == d.records[i].empathy);
        CHECK(back.records[i].distress == d.records[i].distress);
        CHECK(back.records[i].emotion == d.records[i].emotion);
    }
}

TEST_CASE("loading twice gives identical datasets") {
    const auto a = load_task_tsv(kFixtures / "task_small.tsv", Split::train);
    const auto b = load_task_tsv(kFixtures / "task_small.tsv", Split::train);
    CHECK(to_tsv(a) == to_tsv(b));
}

TEST_CASE("class histogram") {
    Dataset d;
    for (auto l : {EmotionLabel::joy, EmotionLabel::joy, EmotionLabel::fear, EmotionLabel::joy}) {
        EssayRecord r;
        r.id = std::to_string(d.records.size());
        r.text = "t";
        r.emotion = l;
        d.records.push_back(r);
    }
    const Histogram h = class_histogram(d);
    CHECK(h[code(EmotionLabel::joy)] == 3);
    CHECK(h[code(EmotionLabel::fear)] == 1);
    CHECK(h[code(EmotionLabel::anger)] == 0);
    CHECK(class_histogram(Dataset{}) == Histogram{});

    d.records.push_back(EssayRecord{"unlabeled", "t", {}, {}, {}, {}});
    try {
        class_histogram(d);
        FAIL("expected an error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("unlabeled") != std::string::npos);
    }
}

TEST_CASE("histogram total equals record count on a random dataset") {
    Rng rng(8);
    Dataset d;
    Histogram brute{};
    for (int i = 0; i < 100; ++i) {
        EssayRecord r;
        r.id = std::to_string(i);
        r.text = "t";
        const auto c = rng.uniform_below(7);
        r.emotion = label_from_code(static_cast<int>(c));
        ++brute[c];
        d.records.push_back(r);
    }
    const Histogram h = class_histogram(d);
    std::size_t total = 0;
    for (auto c : h) total += c;
    CHECK(total == 100);
    CHECK(h == brute);
}

TEST_CASE("histogram csv has seven class rows") {
    const std::string csv = histogram_csv(Histogram{1, 2, 3, 4, 5, 6, 7});
    CHECK(csv == "class,count\nanger,1\ndisgust,2\nfear,3\njoy,4\nneutral,5\nsadness,6\nsurprise,7\n");
}

TEST_CASE("emotion parsing is case-insensitive and serialized lowercase") {
    CHECK(parse_emotion("SaDnEsS") == EmotionLabel::sadness);
    CHECK(to_string(EmotionLabel::surprise) == "surprise");
    CHECK_FALSE(parse_emotion("love").has_value());
}

TEST_CASE("save and load through files") {
    testing::TempDir dir;
    const Dataset d = testing::keyword_corpus(20, 1, Split::train, "k");
    save_tsv(d, dir / "nested/out.tsv");
    CHECK(to_tsv(load_task_tsv(dir / "nested/out.tsv", Split::train)) == to_tsv(d));
    CHECK_THROWS_AS(load_task_tsv(dir / "missing.tsv", Split::train), DataError);
}
