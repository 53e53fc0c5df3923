#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "trire/config.hpp"
#include "trire/errors.hpp"

using namespace trire;

TEST_CASE("empty text yields the full default config") {
    ExperimentConfig c = parse_config_text("");
    CHECK(c.method == Method::TriRE);
    CHECK(c.trire.eta == 0.002);
    CHECK(c.trire.eta_prime == 0.0001);
    CHECK(c.trire.cwi.gamma == 0.2);
    CHECK(c.trire.lambda == 0.04);
    CHECK(c.trire.mu == 0.999);
    CHECK(c.trire.zeta == 0.12);
    CHECK(c.trire.rewind_percentile == 0.9);
    CHECK(c.trire.batch_size == 32);
    // Per-task budget split 3:1:1.
    CHECK(c.trire.epochs_retain == 3);
    CHECK(c.trire.epochs_revise == 1);
    CHECK(c.trire.epochs_rewind == 1);
}

TEST_CASE("comments, sections, and whitespace are tolerated") {
    ExperimentConfig c = parse_config_text(
        "# a comment\n"
        "[model]\n"
        "  hidden = 64, 32  # inline comment\n"
        "\n"
        "eta = 0.01\n");
    CHECK(c.hidden == std::vector<std::size_t>{64, 32});
    CHECK(c.trire.eta == 0.01);
}

TEST_CASE("unknown keys are rejected with the line number") {
    CHECK_THROWS_WITH_AS(parse_config_text("eta = 0.01\nnot_a_key = 3\n"),
                         doctest::Contains("line 2"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("not_a_key = 3\n"),
                         doctest::Contains("unknown key"), ConfigError);
}

TEST_CASE("type errors carry the key and line") {
    CHECK_THROWS_WITH_AS(parse_config_text("eta = fast\n"),
                         doctest::Contains("eta"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("batch = -3\n"),
                         doctest::Contains("batch"), ConfigError);
}

TEST_CASE("constraint violations are named") {
    CHECK_THROWS_WITH_AS(parse_config_text("rewind_percentile = 1.5\n"),
                         doctest::Contains("rewind_percentile"), ConfigError);
    // eta_prime >= eta is a cross-key constraint caught at finalize.
    CHECK_THROWS_WITH_AS(parse_config_text("eta = 0.0001\neta_prime = 0.01\n"),
                         doctest::Contains("eta_prime"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("gamma = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("epochs = 2\n"), ConfigError);
}

TEST_CASE("er baseline config with a buffer") {
    ExperimentConfig c = parse_config_text("method = er\nbuffer = 200\n");
    CHECK(c.method == Method::Er);
    CHECK(c.trire.buffer_capacity == 200);
}

TEST_CASE("idx dataset requires all four paths") {
    CHECK_THROWS_WITH_AS(parse_config_text("dataset = idx\nidx_train_images = a\n"),
                         doctest::Contains("idx"), ConfigError);
}

TEST_CASE("seed lists parse and reject emptiness") {
    ExperimentConfig c = parse_config_text("seeds = 3,5,8\n");
    CHECK(c.seeds == std::vector<std::uint64_t>{3, 5, 8});
    CHECK_THROWS_AS(parse_config_text("seeds = ,\n"), ConfigError);
}

TEST_CASE("resolved text round trips to an identical config") {
    ExperimentConfig c = parse_config_text(
        "method = er\nbuffer = 128\neta = 0.004\nhidden = 100,50\nseeds = 1,2\n"
        "kwta_mode = bernoulli\npruning = fisher\nzeta = 0.3\n");
    ExperimentConfig round = parse_config_text(c.resolved_text());
    CHECK(round.resolved_text() == c.resolved_text());
    CHECK(round.method == Method::Er);
    CHECK(round.trire.buffer_capacity == 128);
    CHECK(round.trire.prune_criterion == PruneCriterion::Fisher);
    CHECK(round.trire.dropout_mode == DropoutMode::Bernoulli);
}

TEST_CASE("malformed lines name their position") {
    CHECK_THROWS_WITH_AS(parse_config_text("eta 0.01\n"),
                         doctest::Contains("key=value"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("[model\n"),
                         doctest::Contains("section"), ConfigError);
}

TEST_CASE("overrides re-finalize correctly") {
    ExperimentConfig c = parse_config_text("epochs = 10\n");
    CHECK(c.trire.epochs_retain == 6);
    apply_config_key(c, "epochs", "5");
    c.finalize();
    CHECK(c.trire.epochs_retain == 3);
}
