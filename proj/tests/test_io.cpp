#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "rhd/io.hpp"

using namespace rhd;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string tiny2_text = slurp(RHD_TEST_DATA "/tiny2.json");

ErrorKind kind_of_model(const std::string& text) {
  try {
    parse_model(text);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::unsupported;
}

const char* with_S = R"({
  "outcomes": [{"id": "u", "prob": 0.5}, {"id": "d", "prob": 0.5}],
  "horizon": 1,
  "partitions": [[0, 0], [0, 1]],
  "tau": [1, 0],
  "S": [[1.0, 1.25], [1.0, 0.75]],
  "processes": {"half": 0.5, "grid": [[0, 1], [0, 2]]}
})";

}  // namespace

TEST(Model, RoundTripIsByteExact) {
  Model m = parse_model(tiny2_text);
  const std::string once = model_to_json(m);
  EXPECT_EQ(model_to_json(parse_model(once)), once);
  Model s = parse_model(with_S);
  const std::string twice = model_to_json(s);
  EXPECT_EQ(model_to_json(parse_model(twice)), twice);
  ASSERT_EQ(s.S.size(), 1u);
  EXPECT_EQ(s.S[0](1, 1), 0.75);
  EXPECT_EQ(s.processes.at("grid")(1, 1), 2.0);
}

TEST(Model, RejectsBadDocuments) {
  std::string bad_prob = tiny2_text;
  bad_prob.replace(bad_prob.find("0.25"), 4, "0.15");
  EXPECT_EQ(kind_of_model(bad_prob), ErrorKind::input);

  std::string coarsening = tiny2_text;
  coarsening.replace(coarsening.find("[0, 1, 2, 3]"), 12, "[0, 0, 0, 1]");
  EXPECT_EQ(kind_of_model(coarsening), ErrorKind::input);

  std::string late_tau = tiny2_text;
  late_tau.replace(late_tau.find("[2, 1, 2, 0]"), 12, "[3, 1, 2, 0]");
  EXPECT_EQ(kind_of_model(late_tau), ErrorKind::input);

  EXPECT_EQ(kind_of_model("{"), ErrorKind::input);
  EXPECT_EQ(kind_of_model(R"({"outcomes": []})"), ErrorKind::input);
  std::string extra = tiny2_text;
  extra.replace(extra.find("\"horizon\""), 0, "\"colour\": 1, ");
  EXPECT_EQ(kind_of_model(extra), ErrorKind::input);

  std::string unadapted = with_S;
  unadapted.replace(unadapted.find("[[1.0, 1.25], [1.0, 0.75]]"), 26, "[[1.0, 1.25], [2.0, 0.75]]");
  EXPECT_EQ(kind_of_model(unadapted), ErrorKind::input);
}

TEST(Params, TablesAndReferences) {
  Model m = parse_model(with_S);
  auto p = parse_params(R"({"route": "thm58", "phi": "half", "phi_pr": [[0, 0.1], [0, 0.2]], "base": 1})", m);
  EXPECT_EQ(p.route, Route::thm58);
  EXPECT_EQ(p.phi_o(0, 1), 0.5);
  EXPECT_EQ(p.phi_pr(1, 1), 0.2);
  EXPECT_EQ(p.base(1, 0), 1.0);
  EXPECT_TRUE(p.V_F.empty());

  EXPECT_THROW(parse_params(R"({"phi": 1, "phi_o": 1})", m), Error);
  EXPECT_THROW(parse_params(R"({"phi": "missing"})", m), Error);
  EXPECT_THROW(parse_params(R"({"route": "sideways"})", m), Error);
  EXPECT_THROW(parse_params(R"({"phi_pr": [[0, 1]]})", m), Error);
  EXPECT_THROW(parse_params(R"({"gamma": 1})", m), Error);
}

TEST(Scenario, RoundTripAndRejection) {
  jd::Scenario sc = parse_scenario(R"({"sigma": 0.3, "n_paths": 500, "obs_times": [0, 0.5, 1]})");
  EXPECT_EQ(sc.sigma, 0.3);
  EXPECT_EQ(sc.n_paths, 500u);
  jd::Scenario back = parse_scenario(scenario_to_json(sc));
  EXPECT_EQ(scenario_to_json(back), scenario_to_json(sc));
  EXPECT_THROW(parse_scenario(R"({"sigmaa": 0.3})"), Error);
}

TEST(Csv, RoundTrip) {
  Model m = parse_model(tiny2_text);
  Process x(4, 2);
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t n = 0; n <= 2; ++n) x(a, n) = 0.1 * static_cast<double>(a) - 1.0 / 3.0 * static_cast<double>(n);
  const std::string csv = process_csv(x, m.space.ids());
  Process y = parse_process_csv(csv, m.space.ids(), 2);
  EXPECT_EQ(y.max_abs_diff(x), 0.0);
  Process z = parse_process_csv("w1,0,1\nw2,0,1\nw3,0,1\nw4,0,1\nw1,1,2\nw2,1,2\nw3,1,2\nw4,1,2\n"
                                "w1,2,3\nw2,2,3\nw3,2,3\nw4,2,3\n",
                                m.space.ids(), 2);
  EXPECT_EQ(z(3, 2), 3.0);
  EXPECT_THROW(parse_process_csv("w1,0,1\n", m.space.ids(), 2), Error);
  EXPECT_THROW(parse_process_csv(csv + "w1,0,5\n", m.space.ids(), 2), Error);
  EXPECT_THROW(parse_process_csv("w9,0,1\n", m.space.ids(), 2), Error);
}

TEST(Format, SeventeenDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(2.0), "2");
}
