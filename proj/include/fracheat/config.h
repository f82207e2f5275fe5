#pragma once

#include "fracheat/cylinder.h"
#include "fracheat/frac_params.h"
#include "fracheat/greens.h"
#include "fracheat/quadrature.h"
#include "fracheat/regularity.h"
#include "fracheat/rescale.h"

#include "json.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fracheat {

  struct RunConfig {
    FracParams frac;
    QuadratureSpec quad;
    long long seed = 0;
    int threads = 1;
    std::string output_dir = "fracheat_out";
    std::string base_dir;                          // for relative grid paths
    std::map<std::string, nlohmann::json> fields;  // name -> catalog spec, each validated

    struct Kernel {
      long samples = 100000;
      double slack = 1e-12;
      std::vector<SpaceTimePoint> points;   // (dx, dt) for `kernel eval`
    } kernel;

    struct Op {
      std::string field = "default";
      std::vector<SpaceTimePoint> points;
    } op;

    struct Solve {
      std::string field = "source";
      ParabolicCylinder Q;
      int steps_x = 33, steps_t = 25;
      std::vector<SpaceTimePoint> points;   // extra pointwise convolutions
    } solve;

    struct Decompose {
      std::string u = "solution", f = "source";
      ParabolicCylinder Q;
      int steps_x = 17, steps_t = 13;
      int spot_checks = 3;
      double spot_tol = 1e-2;
    } decompose;

    struct Reg {
      std::string field = "default";
      std::string source = "source";        // right-hand side for `reg theorem`
      HolderSpec holder;
      ParabolicCylinder Q, Qt;
      int steps_x = 129, steps_t = 33;      // on Qt (or Q for `reg holder`)
      int outer_steps_x = 33, outer_steps_t = 25;
      std::string theorem = "holder";       // holder | schauder
      std::optional<double> alpha;          // source exponent for schauder
    } reg;

    struct Rescale {
      BlowupProblem prob;
      BlowupVariant variant = BlowupVariant::Height;
      std::string regime = "height";        // height | gradient | none: which hypothesis set to enforce
      double R = 1.0;
      SpaceTimePoint X;
      std::string field = "synthetic";      // "synthetic" or the name of a grid field
      std::vector<double> heights{1e2, 1e3, 1e4};
      bool spike = true;
      int grid_steps = 201;
      int steps_x = 65, steps_t = 33;
    } rescale;

    struct Selftest {
      std::vector<int> criteria{1, 2, 3, 4, 5, 6, 7, 8};
      bool quick = false;
    } selftest;
  };

  // Strict: unknown keys anywhere are rejected, errors name the key path. Throws ConfigError.
  RunConfig parse_config(const std::string& text, const std::string& base_dir = {});
  RunConfig parse_config(const nlohmann::json& doc, const std::string& base_dir = {});

  // defaults document, for `--print-config` style use and the README
  nlohmann::json default_config_json();

}
