#include "doctest.h"

#include "pglab/errors.hpp"
#include "pglab/io.hpp"
#include "pglab/mdp.hpp"

#include "support.hpp"

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

using namespace pglab;
using nlohmann::json;

TEST_CASE("doubles survive the round trip through text") {
    const double values[] = {0.1,
                             1.0 / 3.0,
                             1e-300,
                             std::numeric_limits<double>::denorm_min(),
                             std::numeric_limits<double>::max(),
                             -0.0,
                             42.0,
                             -123456789.123456789,
                             6.02214076e23};
    for (const double v : values) {
        // std::from_chars round-trips subnormals without the range errors
        // the strto* family reports for them.
        const std::string text = format_double(v);
        double back = 0.0;
        const auto result = std::from_chars(text.data(), text.data() + text.size(), back);
        REQUIRE(result.ec == std::errc());
        CHECK(back == v);
        CHECK(std::signbit(back) == std::signbit(v));
    }
    CHECK_THROWS_AS(format_double(std::nan("")), ContractViolation);
    CHECK_THROWS_AS(format_double(std::numeric_limits<double>::infinity()), ContractViolation);
}

TEST_CASE("canonical dumps sort keys and escape strings") {
    json doc;
    doc["zeta"] = 1;
    doc["alpha"] = json::array({1.5, true, nullptr});
    doc["mid"] = json{{"b", "x\"y"}, {"a", "line\nbreak"}};
    const std::string dumped = canonical_dump(doc);
    CHECK(dumped ==
          "{\"alpha\":[1.5,true,null],\"mid\":{\"a\":\"line\\nbreak\",\"b\":\"x\\\"y\"},"
          "\"zeta\":1}");

    // Equal values give equal bytes regardless of construction order.
    json again;
    again["mid"] = json{{"a", "line\nbreak"}, {"b", "x\"y"}};
    again["alpha"] = json::array({1.5, true, nullptr});
    again["zeta"] = 1;
    CHECK(canonical_dump(again) == dumped);

    // Reparsing the dump and dumping again is a fixed point.
    CHECK(canonical_dump(json::parse(dumped)) == dumped);
}

TEST_CASE("csv flattening uses dotted paths and indices") {
    json report;
    report["alpha"] = 1.5;
    report["vec"] = json::array({1.0, 2.0});
    report["nested"] = json{{"m", json::array({json::array({1.0, 2.0})})}};
    report["note"] = "has,comma";
    const std::string csv = csv_dump(report, "runX");

    std::string expected = "run_id,quantity,coordinate,value\n";
    expected += "runX,alpha,,1.5\n";
    expected += "runX,nested.m,0.0,1\n";
    expected += "runX,nested.m,0.1,2\n";
    expected += "runX,note,,\"has,comma\"\n";
    expected += "runX,vec,0,1\n";
    expected += "runX,vec,1,2\n";
    CHECK(csv == expected);
}

TEST_CASE("mdp documents round-trip exactly") {
    const Mdp mdp = make_random_mdp(7, 3, 0.9, 99);
    const Mdp back = mdp_from_json(mdp_to_json(mdp));
    CHECK(back.fingerprint() == mdp.fingerprint());

    const auto path = (testsupport::scratch_dir() / "roundtrip.json").string();
    write_mdp(mdp, path);
    const Mdp loaded = load_mdp(path);
    CHECK(loaded.fingerprint() == mdp.fingerprint());

    // Rewriting the loaded instance reproduces the file byte for byte.
    const auto path2 = (testsupport::scratch_dir() / "roundtrip2.json").string();
    write_mdp(loaded, path2);
    CHECK(testsupport::read_bytes(path) == testsupport::read_bytes(path2));
}

TEST_CASE("json syntax errors carry a line number") {
    const auto path = (testsupport::scratch_dir() / "broken.json").string();
    write_text_file(path, "{\n  \"num_states\": 2,\n  oops\n}\n");
    try {
        parse_json_file(path);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        const std::string message = e.what();
        CHECK(message.find("line 3") != std::string::npos);
        CHECK(message.find(path) != std::string::npos);
    }
    CHECK_THROWS_AS(read_text_file((testsupport::scratch_dir() / "missing.json").string()),
                    ParseError);
}

TEST_CASE("schema violations surface as parse errors") {
    const json good = mdp_to_json(make_random_mdp(4, 2, 0.9, 1));

    json missing = good;
    missing.erase("gamma");
    CHECK_THROWS_AS(mdp_from_json(missing), ParseError);

    json wrong_type = good;
    wrong_type["num_states"] = "four";
    CHECK_THROWS_AS(mdp_from_json(wrong_type), ParseError);

    json bad_terminal = good;
    bad_terminal["terminal"] = json::array({1, 0, 0, 0});
    CHECK_THROWS_AS(mdp_from_json(bad_terminal), ParseError);

    json ragged = good;
    ragged["transition"][0][0] = json::array({0.5, 0.5});
    CHECK_THROWS_AS(mdp_from_json(ragged), ParseError);

    // Structurally sound but violating the stochasticity invariant.
    json non_stochastic = good;
    non_stochastic["transition"][0][0][0] =
        non_stochastic["transition"][0][0][0].get<double>() + 0.5;
    CHECK_THROWS_AS(mdp_from_json(non_stochastic), ParseError);

    CHECK_THROWS_AS(mdp_from_json(json::array({1, 2, 3})), ParseError);
}

TEST_CASE("tables and feature tensors load from their envelopes") {
    const auto theta_path = (testsupport::scratch_dir() / "theta.json").string();
    json theta_doc;
    theta_doc["theta"] = json::array({json::array({0.25, -0.5}), json::array({0.0, 0.0})});
    write_text_file(theta_path, canonical_dump(theta_doc));
    const Eigen::MatrixXd theta = load_table(theta_path, "theta");
    CHECK(theta.rows() == 2);
    CHECK(theta.cols() == 2);
    CHECK(theta(0, 0) == 0.25);
    CHECK(theta(0, 1) == -0.5);
    CHECK_THROWS_AS(load_table(theta_path, "baseline"), ParseError);

    const auto features_path = (testsupport::scratch_dir() / "features.json").string();
    json features_doc;
    features_doc["features"] = json::array(
        {json::array({json::array({1.0, 0.0}), json::array({0.0, 1.0})}),
         json::array({json::array({0.0, 0.0}), json::array({0.0, 0.0})})});
    write_text_file(features_path, canonical_dump(features_doc));
    const std::vector<Eigen::MatrixXd> phi = load_feature_tensor(features_path);
    REQUIRE(phi.size() == 2);
    CHECK(phi[0].rows() == 2);
    CHECK(phi[0].cols() == 2);
    CHECK(phi[0](0, 0) == 1.0);

    json ragged;
    ragged["features"] = json::array(
        {json::array({json::array({1.0}), json::array({0.0, 1.0})}),
         json::array({json::array({0.0}), json::array({0.0})})});
    const auto ragged_path = (testsupport::scratch_dir() / "ragged.json").string();
    write_text_file(ragged_path, canonical_dump(ragged));
    CHECK_THROWS_AS(load_feature_tensor(ragged_path), ParseError);
}

TEST_CASE("vector and matrix conversions validate their input") {
    CHECK_THROWS_AS(vector_from_json(json{{"not", "array"}}, "v"), ParseError);
    CHECK_THROWS_AS(vector_from_json(json::array({1.0, "two"}), "v"), ParseError);
    CHECK_THROWS_AS(
        matrix_from_json(json::array({json::array({1.0}), json::array({1.0, 2.0})}), "m"),
        ParseError);

    const Eigen::VectorXd v = vector_from_json(json::array({1.0, 2.5}), "v");
    CHECK(v(1) == 2.5);
    const Eigen::MatrixXd m =
        matrix_from_json(json::parse(canonical_dump(matrix_to_json(Eigen::MatrixXd::Identity(3, 3)))),
                         "m");
    CHECK((m - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);
}
