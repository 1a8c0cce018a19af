#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <string>

#include "cidc/params.hpp"
#include "doctest.h"

using namespace cidc;

TEST_CASE("busy slot length is exact in mini-slots") {
  CHECK(derive_k(254e-6, 58e-6, 13e-6) == 24);
  CHECK(derive_k(332e-6, 58e-6, 13e-6) == 30);
  CHECK(derive_k(72e-6, 58e-6, 13e-6) == 10);
  CHECK(derive_k(20e-6, 20e-6, 10e-6) == 4);
}

TEST_CASE("non-integral busy slot is rejected and the message names the inputs") {
  try {
    derive_k(333e-6, 58e-6, 13e-6);
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    CHECK(what.find("t_tx") != std::string::npos);
    CHECK(what.find("t_difs") != std::string::npos);
    CHECK(what.find("t_slot") != std::string::npos);
  }
  CHECK_THROWS_AS(derive_k(0.0, 58e-6, 13e-6), std::invalid_argument);
  CHECK_THROWS_AS(derive_k(254e-6, 58e-6, 0.0), std::invalid_argument);
}

TEST_CASE("cycle length and offset quantization") {
  CHECK(cycle_minis(10.0, 13e-6) == 7692);
  CHECK(cycle_minis(0.1, 13e-6) == 769230);
  CHECK(quantize_offset(0.025, 13e-6) == 1923);
  CHECK(quantize_offset(0.0, 13e-6) == 0);
  CHECK_THROWS_AS(cycle_minis(0.0, 13e-6), std::invalid_argument);
  CHECK_THROWS_AS(quantize_offset(-1e-6, 13e-6), std::invalid_argument);
}

TEST_CASE("parameter validation") {
  ProtocolParams p;  // defaults are consistent
  CHECK_NOTHROW(validate(p));

  ProtocolParams bad = p;
  bad.lambda = 0.0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  bad = p;
  bad.m_param = 0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  bad = p;
  bad.delta_churn = -1.0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad.delta_churn = 100.5;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  bad = p;
  bad.lambda = 1e6;  // lambda * t_slot reaches 1
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  bad = p;
  bad.k_busy = 25;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  CHECK(with_derived_k(bad).k_busy == 24);
  CHECK_NOTHROW(validate(with_derived_k(bad)));

  bad = p;
  bad.t_tx = 332e-6;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  CHECK(with_derived_k(bad).k_busy == 30);
}
