#include "doctest.h"

#include <fstream>
#include <sstream>

#include "monomval/cli.hpp"

using namespace monomval;

namespace {

std::string path(const std::string& rel) { return std::string(MONOMVAL_SOURCE_DIR) + "/" + rel; }

std::string slurp(const std::string& rel) {
    std::ifstream in(path(rel));
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string temp_file(const std::string& name, const std::string& text) {
    std::string p = "/tmp/monomval_test_" + name;
    std::ofstream(p) << text;
    return p;
}

std::string parse_message(const std::string& text) {
    try {
        parse_spec(text);
    } catch (const ParseError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("spec round trip") {
    std::string canonical = slurp("specs/example_f5.spec");
    CHECK(serialize_spec(parse_spec(canonical)) == canonical);
    for (const char* f : {"specs/example_f5_truncated.spec", "specs/purity_violation.spec"}) {
        std::string once = serialize_spec(parse_spec(slurp(f)));
        CHECK(serialize_spec(parse_spec(once)) == once);
    }
}

TEST_CASE("spec parse errors carry line numbers") {
    CHECK(parse_message("field rationals\nrank 1\nvars X1\nbogus 3\n").find("line 4") != std::string::npos);
    CHECK(parse_message("field prime 6\n").find("line 1") != std::string::npos);
    CHECK(parse_message("field rationals\nrank 1\nvars X1 X1\n").find("line 3") != std::string::npos);
    CHECK(parse_message("field rationals\nrank 1\nvars X1\nimage X1 = terms[(1,0): 1]\n").find("line 4") != std::string::npos);
    CHECK_FALSE(parse_message("field rationals\nrank 1\nvars X1 X2\nimage X1 = terms[(1): 1]\n").empty());
    CHECK(parse_message("field rationals\nrank 1\nvars X1\nimage X1 = terms[(1): 1]\nbudgets max_steps=3 colour=2\n").find("line 5") !=
          std::string::npos);
}

TEST_CASE("matrix rows") {
    auto rows = parse_rows("0 0 1\n(0,0,3)\n0, 1, 0\n");
    REQUIRE(rows.size() == 3);
    CHECK(rows[1] == LexVec{0, 0, 3});
    CHECK_THROWS_AS(parse_rows("0 0 1\n0 0 0\n"), ParseError);
    CHECK_THROWS_AS(parse_rows("0 1\n0 0 1\n"), ParseError);
}

TEST_CASE("basis command") {
    Run r = run({"basis", temp_file("ex_rows", "0 0 1\n0 0 1\n0 0 1\n0 0 3\n")});
    CHECK(r.code == exit_code::ok);
    CHECK(r.out.find("X4 -> Y4*Y1^2") != std::string::npos);

    Run id = run({"basis", temp_file("id_rows", "1 0 0\n0 1 0\n0 0 1\n")});
    CHECK(id.code == exit_code::ok);
    CHECK(id.out.find("already a basis") != std::string::npos);

    Run zero = run({"basis", temp_file("zero_rows", "1 0\n0 0\n")});
    CHECK(zero.code == exit_code::parse);
    CHECK(zero.err.find("line 2") != std::string::npos);

    Run spec = run({"basis", path("specs/example_f5.spec")});
    CHECK(spec.code == exit_code::ok);
    CHECK(spec.out.find("X4 -> Y4*Y1^2") != std::string::npos);
}

TEST_CASE("value command") {
    std::string ex = path("specs/example_f5.spec");
    CHECK(run({"value", ex, "X2 - X1"}).out == "(0,0,2)\n");
    CHECK(run({"value", ex, "X1"}).out == "(0,0,1)\n");
    CHECK(run({"value", ex, "0"}).out == "infinity\n");
    CHECK(run({"value", ex, "X4/X1^2 - u3^3*X1"}).out == "(0,0,4)\n");
    CHECK(run({"value", ex, "X2 +"}).code == exit_code::parse);
}

TEST_CASE("monomialize command") {
    Run r = run({"monomialize", path("specs/example_f5.spec")});
    CHECK(r.code == exit_code::ok);
    CHECK(r.out.find("X4 -> Y4*Y1^2") != std::string::npos);
    CHECK(r.out.find("k(u3)") != std::string::npos);
    CHECK(r.out.find("u3 = X3/X1") != std::string::npos);

    Run pure = run({"monomialize", temp_file("pure", "field rationals\nrank 2\nvars X1 X2\nimage X1 = terms[(1,0): 1]\nimage X2 = terms[(0,1): 1]\n"), "--json"});
    CHECK(pure.code == exit_code::ok);
    CHECK(nlohmann::json::parse(pure.out)["log"].empty());

    Run starved = run({"monomialize", path("specs/example_f5_truncated.spec")});
    CHECK(starved.code == exit_code::inconclusive);
    CHECK(starved.out.find("pseudo-convergent prefix for X2 (2 steps)") != std::string::npos);

    Run more = run({"monomialize", path("specs/example_f5_truncated.spec"), "--max-steps", "5"});
    CHECK(more.code == exit_code::inconclusive);
    CHECK(more.out.find("(5 steps)") != std::string::npos);

    CHECK(run({"monomialize", path("specs/purity_violation.spec")}).code == exit_code::purity);
    CHECK(run({"monomialize", temp_file("bad", "field rationals\nrank 1\nvars X1\nbogus\n")}).code == exit_code::parse);
    CHECK(run({"monomialize", "/nonexistent/spec"}).code == exit_code::other);
    CHECK(run({"frobnicate"}).code != exit_code::ok);
}

TEST_CASE("golden json") {
    Run r = run({"monomialize", "--json", path("specs/example_f5.spec")});
    REQUIRE(r.code == exit_code::ok);
    nlohmann::json got = nlohmann::json::parse(r.out);
    nlohmann::json want = nlohmann::json::parse(slurp("tests/golden/example_f5.json"));
    CHECK(got == want);
    for (const char* key : {"log", "basis", "residues", "final_L", "psi_x", "psi_z", "W", "trace", "restarts"}) CHECK(got.contains(key));
}

TEST_CASE("verify command") {
    Run r = run({"verify", path("specs/example_f5.spec"), "--samples", "50"});
    CHECK(r.code == exit_code::ok);
    CHECK(r.out.find("0 mismatches") != std::string::npos);
}
