// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <functional>
#include <sstream>

#include "recross/config.hpp"
#include "recross/error.hpp"
#include "recross/example.hpp"
#include "recross/rng.hpp"

using namespace recross;

namespace {

ExampleCollection parse(const std::string& text) {
    std::istringstream in(text);
    return parse_corpus(in, "fixture");
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an Error");
    return ErrorKind::transport;
}

}  // namespace

TEST_CASE("load_corpus keeps file order and indexes tasks") {
    auto corpus = parse(R"({"id":"a1","task":"a","input":"x y","output":"1"}
{"id":"b1","task":"b","input":"z","output":"2"}
{"id":"a2","task":"a","input":"w","output":""}
)");
    CHECK(corpus.size() == 3);
    CHECK(corpus.by_task().size() == 2);
    CHECK(corpus.by_task().at("a") == std::vector<std::size_t>{0, 2});
    CHECK(corpus[1].example_id == "b1");
    CHECK(corpus.at_id("a2").output_text.empty());
}

TEST_CASE("empty corpus file gives an empty collection") {
    CHECK(parse("").empty());
    CHECK(parse("\n\n").empty());
}

TEST_CASE("duplicate ids are reported with both line numbers") {
    std::string text;
    for (int line = 1; line <= 9; ++line) {
        const std::string id = (line == 4 || line == 9) ? "x1" : "id" + std::to_string(line);
        text += R"({"id":")" + id + R"(","task":"t","input":"in"})" "\n";
    }
    try {
        parse(text);
        FAIL("expected duplicate error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::duplicate);
        const std::string message = e.what();
        CHECK(message.find("'x1'") != std::string::npos);
        CHECK(message.find("lines 4 and 9") != std::string::npos);
    }
}

TEST_CASE("malformed lines name their line number") {
    try {
        parse("{\"task\":\"t\",\"input\":\"a\"}\n{not json}\n");
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::parse);
        CHECK(std::string(e.what()).find("fixture:2") != std::string::npos);
    }
    CHECK(kind_of([] { parse(R"({"task":"t"})"); }) == ErrorKind::parse);
    CHECK(kind_of([] { parse(R"({"task":"t","input":5})"); }) == ErrorKind::parse);
    CHECK(kind_of([] { parse(R"(["task"])"); }) == ErrorKind::parse);
    CHECK(kind_of([] { parse(R"({"task":"t","input":""})"); }) == ErrorKind::parse);
}

TEST_CASE("missing ids are synthesized from task and line number; unknown fields are ignored") {
    auto corpus = parse("\n{\"task\":\"squad\",\"input\":\"q\",\"extra\":1}\n");
    REQUIRE(corpus.size() == 1);
    CHECK(corpus[0].example_id == "squad-000002");
}

TEST_CASE("text is stored verbatim") {
    auto corpus = parse(R"({"id":"u","task":"t","input":"  Héllo\tWORLD  ","output":" Yes. "})");
    CHECK(corpus[0].input_text == "  Héllo\tWORLD  ");
    CHECK(corpus[0].output_text == " Yes. ");
}

TEST_CASE("serialize then load is identity on all four fields") {
    Rng rng(11);
    const std::string alphabet = "ab \t\"\\\n{}é";
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Example> examples;
        const auto n = rng.below(8);
        for (std::uint64_t i = 0; i < n; ++i) {
            auto random_text = [&](bool allow_empty) {
                std::string s;
                const auto len = rng.below(12) + (allow_empty ? 0 : 1);
                for (std::uint64_t c = 0; c < len; ++c) {
                    // Multi-byte characters are taken whole.
                    const auto pick = rng.below(alphabet.size() - 1);
                    s += alphabet[pick] == '\xc3' ? std::string("é") : std::string(1, alphabet[pick]);
                }
                return s;
            };
            examples.push_back({"id-" + std::to_string(i), "task" + std::to_string(rng.below(3)), random_text(false),
                                random_text(true)});
        }
        ExampleCollection original(examples);
        std::stringstream buffer;
        write_corpus(buffer, original);
        auto reloaded = parse_corpus(buffer);
        CHECK(reloaded.examples() == original.examples());
    }
}

TEST_CASE("filter_tasks") {
    std::vector<Example> examples;
    for (int i = 0; i < 2; ++i) examples.push_back({"a" + std::to_string(i), "a", "in", "out"});
    for (int i = 0; i < 3; ++i) examples.push_back({"b" + std::to_string(i), "b", "in", "out"});
    for (int i = 0; i < 2; ++i) examples.push_back({"c" + std::to_string(i), "c", "in", "out"});
    ExampleCollection corpus(examples);

    SUBCASE("set difference") {
        auto filtered = filter_tasks(corpus, {"b"});
        CHECK(filtered.size() == 4);
        CHECK(filtered.by_task().size() == 2);
        CHECK_FALSE(filtered.by_task().contains("b"));
    }
    SUBCASE("empty exclusion is identity") {
        CHECK(filter_tasks(corpus, {}).examples() == corpus.examples());
    }
    SUBCASE("excluding every task empties the corpus") {
        CHECK(filter_tasks(corpus, {"a", "b", "c"}).empty());
    }
    SUBCASE("absent task is a no-op") {
        CHECK(filter_tasks(corpus, {"zzz"}).examples() == corpus.examples());
    }
    SUBCASE("union of disjoint exclusions equals sequential filtering") {
        const std::vector<std::set<std::string>> subsets = {{}, {"a"}, {"b"}, {"c"}, {"a", "c"}, {"zzz"}};
        for (const auto& a : subsets) {
            for (const auto& b : subsets) {
                bool disjoint = true;
                for (const auto& t : a) disjoint = disjoint && !b.contains(t);
                if (!disjoint) continue;
                std::set<std::string> both = a;
                both.insert(b.begin(), b.end());
                CHECK(filter_tasks(corpus, both).examples() == filter_tasks(filter_tasks(corpus, a), b).examples());
            }
        }
    }
}

TEST_CASE("collection invariants") {
    CHECK_THROWS_AS(ExampleCollection({{"", "t", "in", ""}}), Error);
    CHECK_THROWS_AS(ExampleCollection({{"x", "", "in", ""}}), Error);
    CHECK_THROWS_AS(ExampleCollection({{"x", "t", "", ""}}), Error);
    CHECK(kind_of([] { ExampleCollection({{"x", "t", "a", ""}, {"x", "t", "b", ""}}); }) == ErrorKind::duplicate);
}

TEST_CASE("run config defaults and key=value overrides") {
    RunConfig defaults;
    CHECK(defaults.query_size == 16);
    CHECK(defaults.final_size == 512);
    CHECK(defaults.upsample_ratio == 2);
    CHECK(defaults.candidate_size() == 1024);
    CHECK(defaults.finetune.learning_rate == 1e-6);
    CHECK(defaults.finetune.batch_size == 4);
    CHECK(defaults.finetune.epochs == 2);
    CHECK(defaults.excluded_tasks.empty());

    std::istringstream in("# comment\nfinal_size = 8\nupsample_ratio=3 # trailing\nexcluded_tasks = qa, summarization\n"
                          "finetune_lr = 2e-5\nrng_seed = 42\nunknown_key = ignored\n");
    auto config = apply_run_config(KeyValueConfig::parse(in));
    CHECK(config.final_size == 8);
    CHECK(config.candidate_size() == 24);
    CHECK(config.excluded_tasks == std::set<std::string>{"qa", "summarization"});
    CHECK(config.finetune.learning_rate == 2e-5);
    CHECK(config.rng_seed == 42);

    std::istringstream round_trip(to_key_values(config));
    auto again = apply_run_config(KeyValueConfig::parse(round_trip));
    CHECK(again.final_size == config.final_size);
    CHECK(again.excluded_tasks == config.excluded_tasks);
    CHECK(again.finetune == config.finetune);

    std::istringstream bad("final_size = many\n");
    CHECK(kind_of([&] { apply_run_config(KeyValueConfig::parse(bad)); }) == ErrorKind::parse);
    std::istringstream no_eq("final_size 3\n");
    CHECK(kind_of([&] { KeyValueConfig::parse(no_eq); }) == ErrorKind::parse);

    RunConfig invalid;
    invalid.upsample_ratio = 0;
    CHECK(kind_of([&] { invalid.validate(); }) == ErrorKind::precondition);
}
