#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "deconviv/csv.hpp"
#include "deconviv/errors.hpp"
#include "deconviv/simulation.hpp"

using namespace deconviv;

namespace {

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string& name, const std::string& content = "") {
        path = std::filesystem::temp_directory_path() / name;
        std::ofstream f(path);
        f << content;
    }
    ~TempFile() {
        std::error_code ec;
        std::filesystem::remove(path, ec);
    }
    std::string str() const { return path.string(); }
};

} // namespace

TEST_CASE("samples round trip bitwise through CSV") {
    RngStream rng(5);
    const SimData d = generate(Design::nonlinear_quartic, 100, rng);
    TempFile f("deconviv_roundtrip.csv");
    write_sample_csv(f.str(), d.sample);
    const Sample back = read_sample_csv(f.str());
    REQUIRE(back.size() == d.sample.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back.y[i] == d.sample.y[i]);
        CHECK(back.x[i] == d.sample.x[i]);
        CHECK(back.w1[i] == d.sample.w1[i]);
        CHECK(back.w2[i] == d.sample.w2[i]);
    }
}

TEST_CASE("17-digit formatting survives a parse") {
    for (double v : {0.1, -1.0 / 3.0, 1234567.89, 2.2250738585072014e-308,
                     0.503234470959146}) {
        const std::string s = format_g17(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("header must be exactly y,x,w1,w2") {
    TempFile f("deconviv_badheader.csv", "y,x,w1\n0,0,0\n1,1,1\n");
    CHECK_THROWS_AS(read_sample_csv(f.str()), MissingColumn);
    TempFile g("deconviv_badheader2.csv", "x,y,w1,w2\n0,0,0,0\n1,1,1,1\n");
    CHECK_THROWS_AS(read_sample_csv(g.str()), MissingColumn);
    TempFile h("deconviv_empty.csv", "");
    CHECK_THROWS_AS(read_sample_csv(h.str()), MissingColumn);
}

TEST_CASE("rows with the wrong shape or content are rejected") {
    TempFile f("deconviv_threefields.csv", "y,x,w1,w2\n1,2,3\n4,5,6,7\n");
    CHECK_THROWS_AS(read_sample_csv(f.str()), MalformedCsv);
    TempFile g("deconviv_badnumber.csv", "y,x,w1,w2\n1,2,3,abc\n4,5,6,7\n");
    CHECK_THROWS_AS(read_sample_csv(g.str()), MalformedCsv);
    TempFile h("deconviv_nan.csv", "y,x,w1,w2\n1,2,3,nan\n4,5,6,7\n");
    CHECK_THROWS_AS(read_sample_csv(h.str()), MalformedCsv);
    TempFile i("deconviv_inf.csv", "y,x,w1,w2\n1,2,3,inf\n4,5,6,7\n");
    CHECK_THROWS_AS(read_sample_csv(i.str()), MalformedCsv);
    // the error names the offending line
    TempFile j("deconviv_lineno.csv", "y,x,w1,w2\n1,2,3,4\n5,6,seven,8\n");
    CHECK_THROWS_WITH_AS(read_sample_csv(j.str()), doctest::Contains("line 3"), MalformedCsv);
}

TEST_CASE("a sample needs at least two rows") {
    TempFile f("deconviv_onerow.csv", "y,x,w1,w2\n1,2,3,4\n");
    CHECK_THROWS_AS(read_sample_csv(f.str()), EmptySample);
    TempFile g("deconviv_norows.csv", "y,x,w1,w2\n");
    CHECK_THROWS_AS(read_sample_csv(g.str()), EmptySample);
}

TEST_CASE("CRLF line endings and blank lines are tolerated") {
    TempFile f("deconviv_crlf.csv", "y,x,w1,w2\r\n1,2,3,4\r\n\r\n5,6,7,8\r\n");
    const Sample s = read_sample_csv(f.str());
    REQUIRE(s.size() == 2);
    CHECK(s.y[0] == 1.0);
    CHECK(s.w2[0] == 4.0);
    CHECK(s.y[1] == 5.0);
    CHECK(s.w2[1] == 8.0);
}

TEST_CASE("missing file reports an input error") {
    CHECK_THROWS_AS(read_sample_csv("/nonexistent/deconviv_missing.csv"), InputError);
}
