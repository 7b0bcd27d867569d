#include <doctest.h>

#include <filesystem>

#include "hyco/config.hpp"
#include "hyco/io.hpp"
#include "hyco/workloads.hpp"

using namespace hyco;

TEST_SUITE("config") {
  TEST_CASE("run config roundtrips through JSON") {
    RunConfig c;
    c.budget.lut_total = 90000;
    c.budget.pe_grid = {1, 4, 16};
    c.constraint.max_latency_s = 0.002;
    c.params.population = 12;
    c.params.seed = 77;
    c.zen.batch = 4;
    c.coeffs.e_add = 1e-3;
    c.energy_source = "explicit";
    c.output_dir = "somewhere";
    const json j = to_json(c);
    RunConfig back;
    from_json_into(j, back);
    CHECK(to_json(back) == j);
    CHECK(back.budget.pe_grid == std::vector<int>{1, 4, 16});
    CHECK(back.params.seed == 77);
    CHECK(*back.constraint.max_latency_s == 0.002);
  }

  TEST_CASE("unknown keys are rejected with their path") {
    RunConfig c;
    try {
      from_json_into(json::parse(R"({"params": {"populaton": 3}})"), c);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("params.populaton") != std::string::npos);
    }
    CHECK_THROWS_AS(from_json_into(json::parse(R"({"budget": {"ladder": "fibonacci"}})"), c), ParseError);
    CHECK_THROWS_AS(from_json_into(json::parse(R"({"params": {"population": "many"}})"), c), ParseError);
    CHECK_THROWS_AS(from_json_into(json::parse(R"({"energy": {"source": "guess"}})"), c), ParseError);
    CHECK_THROWS_AS(from_json_into(json::parse(R"({"zen": {"batch": 1}})"), c), ParseError);
  }

  TEST_CASE("partial documents keep defaults") {
    RunConfig c;
    from_json_into(json::parse(R"({"params": {"iterations": 2}})"), c);
    CHECK(c.params.iterations == 2);
    CHECK(c.params.population == SearchParams{}.population);
    from_json_into(json::parse(R"({"energy": {"e_mult_mj_per_mop": 0.01}})"), c);
    CHECK(c.energy_source == "explicit");
    CHECK(c.coeffs.e_mult == 0.01);
  }

  TEST_CASE("environment overrides") {
    const std::map<std::string, std::string> env{{"HYCO_PARAMS__SEED", "42"},
                                                 {"HYCO_OUTPUT_DIR", "out/x"},
                                                 {"HYCO_BUDGET__LADDER", "divisors"},
                                                 {"OTHER_THING", "1"},
                                                 {"HYCO_", "ignored"}};
    const auto j = env_overrides(env);
    CHECK(j["params"]["seed"] == 42);
    CHECK(j["output_dir"] == "out/x");
    CHECK(j["budget"]["ladder"] == "divisors");
    CHECK(j.size() == 3);
  }

  TEST_CASE("merge precedence: later layers win, siblings survive") {
    json base = to_json(RunConfig{});
    merge_json(base, json::parse(R"({"params": {"seed": 1, "population": 9}})"));
    merge_json(base, json::parse(R"({"params": {"seed": 2}})"));
    RunConfig c;
    from_json_into(base, c);
    CHECK(c.params.seed == 2);
    CHECK(c.params.population == 9);
    CHECK(c.params.iterations == SearchParams{}.iterations);
  }

  TEST_CASE("genome parsing") {
    const std::string g = "16-16-1-3-0-1-24-4-3-0-3-32-4-3-0-3-64-4-3-0-3-112-4-3-0-3-192-6-3-0-3-216-6-3-0-1-1792";
    const auto n = parse_genome(g);
    CHECK(format_genome(n) == g);
    std::string letters = "16,16,1,3,C,1,24,4,3,S,3,32,4,3,A,3,64,4,3,0,3,112,4,3,0,3,192,6,3,0,3,216,6,3,0,1,1792";
    const auto m = parse_genome(letters);
    CHECK(m.stages[1].t == LayerType::Shift);
    CHECK(m.stages[2].t == LayerType::Adder);
    try {
      parse_genome("16-16-1-3-0-1-24-4-x-0-3-32-4-3-0-3-64-4-3-0-3-112-4-3-0-3-192-6-3-0-3-216-6-3-0-1-1792", 7);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("line 7") != std::string::npos);
      CHECK(msg.find("stage2.k") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_genome("1-2-3"), ParseError);
    CHECK_THROWS_AS(parse_genome("16-16-1-3-7-1-24-4-3-0-3-32-4-3-0-3-64-4-3-0-3-112-4-3-0-3-192-6-3-0-3-216-6-3-0-1-1792"),
                    ParseError);
  }

  TEST_CASE("accelerator config roundtrip") {
    AcceleratorConfig a;
    a.chunk_c = {ChunkKind::C, 64, {LoopOrder::OS, {1, 8, 16, 4, 4}}};
    a.chunk_s = {ChunkKind::S, 8, {LoopOrder::RS, {2, 4, 4, 2, 2}}};
    a.chunk_a = {ChunkKind::A, 16, {LoopOrder::IS, {1, 1, 1, 1, 1}}};
    a.gb_bytes = 4096;
    CHECK(accelerator_from_json(to_json(a)) == a);
  }

  TEST_CASE("workload suite roundtrip") {
    const auto s = desk_suite(5, 2);
    const auto back = suite_from_json(to_json(s));
    CHECK(to_json(back) == to_json(s));
    CHECK(back.workloads.size() == s.workloads.size());
    CHECK(back.budget.pe_grid == s.budget.pe_grid);
    CHECK(back.grid.pe_c == s.grid.pe_c);
  }

  TEST_CASE("fmt6") {
    CHECK(fmt6(1234567.0) == "1.23457e+06");
    CHECK(fmt6(0.5) == "0.5");
    CHECK(fmt6(std::nan("")) == "nan");
  }

  TEST_CASE("shipped data and configs stay in sync with the code") {
    const std::filesystem::path data(HYCO_DATA_DIR);
    const auto schema = read_json_file(data / "csv_schema.json");
    CHECK(schema["perf.csv"].get<std::vector<std::string>>() == kPerfColumns);
    CHECK(schema["scores.csv"].get<std::vector<std::string>>() == kScoreColumns);
    CHECK(schema["log.csv"].get<std::vector<std::string>>() == kLogColumns);
    CHECK(schema["pareto.csv"].get<std::vector<std::string>>() == kParetoColumns);
    CHECK(to_json(suite_from_json(read_json_file(data / "workloads.json"))) == to_json(desk_suite(0, 5)));
    for (const char* name : {"default.json", "quick.json"}) {
      RunConfig c;
      CHECK_NOTHROW(from_json_into(read_json_file(data.parent_path() / "configs" / name), c));
    }
    RunConfig d;
    from_json_into(read_json_file(data.parent_path() / "configs" / "default.json"), d);
    CHECK(to_json(d) == to_json(RunConfig{}));
  }
}
