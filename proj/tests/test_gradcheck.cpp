#include <doctest.h>

#include "gradcheck_util.hpp"

using namespace desmoke;

TEST_CASE("generator backprop matches central finite differences") {
  auto res = gradcheck::check_generator(2, 1e-4, {}, gradcheck::kGenDataSeed,
                                        gradcheck::kGenInitSeed);
  CAPTURE(res.worst_param);
  CAPTURE(res.max_rel_err);
  CHECK(res.checked >= 60);
  CHECK(res.max_rel_err <= 1e-3);
}

TEST_CASE("discriminator backprop matches central finite differences") {
  auto res = gradcheck::check_discriminator(3, 1e-4, gradcheck::kDiscDataSeed,
                                            gradcheck::kDiscInitSeed);
  CAPTURE(res.worst_param);
  CAPTURE(res.max_rel_err);
  CHECK(res.checked >= 30);
  CHECK(res.max_rel_err <= 1e-3);
}
