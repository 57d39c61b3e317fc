#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "arqplan/scenario.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
};

RunResult run(const std::string& args) {
    std::string cmd = std::string("\"") + ARQPLAN_BIN + "\" " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    char buf[4096];
    size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path temp_dir() {
    static fs::path dir = [] {
        std::string tmpl = (fs::temp_directory_path() / "arqplan_cli_XXXXXX").string();
        std::vector<char> buf(tmpl.begin(), tmpl.end());
        buf.push_back('\0');
        REQUIRE(mkdtemp(buf.data()) != nullptr);
        return fs::path(buf.data());
    }();
    return dir;
}

std::string write_scenario(const std::string& name, const json& doc) {
    fs::path p = temp_dir() / name;
    std::ofstream(p) << doc.dump(2);
    return p.string();
}

json sc5() {
    return json{{"schema", 1},
                {"hops", 5},
                {"los", {0.1, 0.3, 0.1, 0.5, 0.2}},
                {"snr_db", 10.0},
                {"rate", 1.0},
                {"blocklength", 500},
                {"q_sum", 10},
                {"strategy", "SC"}};
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
}

} // namespace

TEST_CASE("outage emits one csv row per hop") {
    std::string file = write_scenario("outage.json", sc5());
    RunResult r = run("outage --scenario \"" + file + "\" --format csv");
    CHECK(r.code == 0);
    auto lines = split_lines(r.out);
    REQUIRE(lines.size() == 6);
    CHECK(lines[0] == "hop,los_c,outage");
    for (int i = 1; i <= 5; ++i) {
        auto cells = split_csv(lines[i]);
        REQUIRE(cells.size() == 3);
        CHECK(cells[0] == std::to_string(i));
        double p = std::stod(cells[2]);
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
}

TEST_CASE("json reports wrap results in an envelope that round trips") {
    std::string file = write_scenario("pdp.json", sc5());
    RunResult r = run("pdp --scenario \"" + file + "\" --allocation 2,3,1,3,1");
    CHECK(r.code == 0);
    json doc = json::parse(r.out);
    CHECK(doc["tool"] == "arqplan");
    CHECK(doc.contains("version"));
    CHECK(doc.contains("timestamp"));
    CHECK(doc["command"] == "pdp");
    double pdp = doc["results"]["pdp"].get<double>();
    CHECK(pdp > 0.0);
    CHECK(pdp < 1.0);
    // the scenario echo must itself be a loadable scenario
    arqplan::Scenario echoed = arqplan::parse_scenario(doc["scenario"]);
    CHECK(echoed.hops == 5);
    REQUIRE(echoed.allocation);
    CHECK(arqplan::sum_allocation(*echoed.allocation) == 10);
}

TEST_CASE("optimize is deterministic and honors the method flag") {
    std::string file = write_scenario("opt.json", sc5());
    RunResult a = run("optimize --scenario \"" + file + "\" --method GREEDY --format csv");
    RunResult b = run("optimize --scenario \"" + file + "\" --method GREEDY --format csv");
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    auto lines = split_lines(a.out);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "q_sum,method,pdp,list_size,evaluations,allocation");
    auto cells = split_csv(lines[1]);
    CHECK(cells[1] == "GREEDY");

    RunResult ex = run("optimize --scenario \"" + file + "\" --format csv");
    auto ex_cells = split_csv(split_lines(ex.out)[1]);
    CHECK(ex_cells[1] == "EXHAUSTIVE"); // scenario default
    // same optimum from both methods on this configuration
    CHECK(cells[2] == ex_cells[2]);
}

TEST_CASE("simulate writes a report and a histogram sidecar") {
    json doc = sc5();
    doc["allocation"] = {2, 3, 1, 3, 1};
    doc.erase("los");
    doc["outage_override"] = {0.09, 0.09, 0.09, 0.07, 0.09};
    doc["sim"] = {{"packets", 20000}, {"seed", 3}};
    std::string file = write_scenario("sim.json", doc);

    fs::path out = temp_dir() / "sim_report.csv";
    RunResult r = run("simulate --scenario \"" + file + "\" --format csv --out \"" +
                      out.string() + "\"");
    CHECK(r.code == 0);
    REQUIRE(fs::exists(out));
    REQUIRE(fs::exists(out.string() + ".hist.csv"));

    std::ifstream rep(out);
    std::string header;
    std::getline(rep, header);
    CHECK(header == "metric,value");

    std::ifstream hist(out.string() + ".hist.csv");
    std::getline(hist, header);
    CHECK(header == "delay_low,count,mass");

    // the seed flag overrides the scenario seed and lands in the report
    RunResult js = run("simulate --scenario \"" + file + "\" --seed 77");
    json jdoc = json::parse(js.out);
    CHECK(jdoc["results"]["seed"] == 77);
    CHECK(jdoc["results"]["packets"] == 20000);
}

TEST_CASE("sweep emits rows per budget and method") {
    json doc = sc5();
    doc["hops"] = 4;
    doc["los"] = {0.1, 0.3, 0.1, 0.5};
    doc["q_sum"] = 8;
    doc["sweep"] = {{"q_min", 6}, {"q_max", 8}};
    std::string file = write_scenario("sweep.json", doc);

    RunResult r = run("sweep --scenario \"" + file + "\"");
    CHECK(r.code == 0);
    auto lines = split_lines(r.out);
    REQUIRE(lines.size() == 1 + 3 * 4); // header + 3 budgets x 4 methods
    CHECK(lines[0] == "q_sum,method,pdp,list_size");

    // pdp never worsens as the budget grows, per method
    std::map<std::string, double> last;
    for (size_t i = 1; i < lines.size(); ++i) {
        auto cells = split_csv(lines[i]);
        REQUIRE(cells.size() == 4);
        double pdp = std::stod(cells[2]);
        auto it = last.find(cells[1]);
        if (it != last.end()) CHECK(pdp <= it->second + 1e-12);
        last[cells[1]] = pdp;
    }

    RunResult one = run("sweep --scenario \"" + file + "\" --method MULTI_FOLD");
    auto mf_lines = split_lines(one.out);
    REQUIRE(mf_lines.size() == 1 + 3);
    for (size_t i = 1; i < mf_lines.size(); ++i) CHECK(split_csv(mf_lines[i])[1] == "MULTI_FOLD");
}

TEST_CASE("usage and validation failures exit with 2") {
    CHECK(run("optimize --scenario /nonexistent.json").code == 2);
    CHECK(run("bogus_command").code == 2);
    CHECK(run("optimize").code == 2); // --scenario is required
    CHECK(run("--help").code == 0);

    std::string file = write_scenario("err.json", sc5());
    CHECK(run("optimize --scenario \"" + file + "\" --method SIDEWAYS").code == 2);
    CHECK(run("pdp --scenario \"" + file + "\" --allocation 1,two,3").code == 2);
    CHECK(run("pdp --scenario \"" + file + "\"").code == 2); // no allocation anywhere
    CHECK(run("sweep --scenario \"" + file + "\"").code == 2); // no sweep range
    // folding a plain retransmission chain is a contract violation
    json nc = sc5();
    nc["strategy"] = "NON_COOP";
    std::string ncfile = write_scenario("nc.json", nc);
    CHECK(run("optimize --scenario \"" + ncfile + "\" --method MULTI_FOLD").code == 2);
}

TEST_CASE("shipped scenario files load and resolve") {
    int seen = 0;
    for (const auto& entry : fs::directory_iterator(ARQPLAN_SCENARIO_DIR)) {
        if (entry.path().extension() != ".json") continue;
        ++seen;
        RunResult r = run("outage --scenario \"" + entry.path().string() + "\" --format csv");
        INFO(entry.path().string());
        CHECK(r.code == 0);
        CHECK(split_lines(r.out).size() >= 2);
    }
    CHECK(seen >= 10);
}
