#include <catch2/catch_amalgamated.hpp>

#include <sstream>
#include <string>
#include <vector>

#include "swapsim/csv.hpp"
#include "swapsim/error.hpp"

using namespace swapsim;

namespace {

std::vector<std::vector<std::string>> read_all(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> fields;
    while (csv_read_record(in, fields)) records.push_back(fields);
    return records;
}

std::string write_all(const std::vector<std::vector<std::string>>& records) {
    std::ostringstream out;
    for (const auto& r : records) csv_write_record(out, r);
    return out.str();
}

} // namespace

TEST_CASE("plain records split on commas and newlines") {
    const auto records = read_all("a,b,c\nd,e,f\n");
    REQUIRE(records.size() == 2);
    CHECK(records[0] == std::vector<std::string>{"a", "b", "c"});
    CHECK(records[1] == std::vector<std::string>{"d", "e", "f"});
}

TEST_CASE("missing trailing newline still yields the last record") {
    const auto records = read_all("a,b\nc,d");
    REQUIRE(records.size() == 2);
    CHECK(records[1] == std::vector<std::string>{"c", "d"});
}

TEST_CASE("carriage returns are stripped at record ends") {
    const auto records = read_all("a,b\r\nc,d\r\n");
    REQUIRE(records.size() == 2);
    CHECK(records[0] == std::vector<std::string>{"a", "b"});
    CHECK(records[1] == std::vector<std::string>{"c", "d"});
}

TEST_CASE("quoted fields keep commas, quotes, and newlines") {
    const auto records = read_all("\"a,b\",\"say \"\"hi\"\"\",\"two\nlines\"\n");
    REQUIRE(records.size() == 1);
    REQUIRE(records[0].size() == 3);
    CHECK(records[0][0] == "a,b");
    CHECK(records[0][1] == "say \"hi\"");
    CHECK(records[0][2] == "two\nlines");
}

TEST_CASE("empty fields and empty lines are preserved") {
    const auto records = read_all("a,,c\n\nx\n");
    REQUIRE(records.size() == 3);
    CHECK(records[0] == std::vector<std::string>{"a", "", "c"});
    CHECK(records[1] == std::vector<std::string>{""});
    CHECK(records[2] == std::vector<std::string>{"x"});
}

TEST_CASE("unterminated quote raises bad_format") {
    std::istringstream in("\"oops");
    std::vector<std::string> fields;
    CHECK_THROWS_AS(csv_read_record(in, fields), Error);
}

TEST_CASE("write then read round-trips awkward content") {
    const std::vector<std::vector<std::string>> records{
        {"plain", "with,comma", "with\"quote"},
        {"multi\nline", "", "trailing space "},
        {"\r\n", ",,,", "\"\"quoted\"\""},
    };
    CHECK(read_all(write_all(records)) == records);
}

TEST_CASE("quoting is only applied when needed") {
    std::ostringstream out;
    csv_write_record(out, {"abc", "a,b", "q\"x"});
    CHECK(out.str() == "abc,\"a,b\",\"q\"\"x\"\n");
}
