// fracheat command line. Talks to the library only through the C API.
#include "fracheat/c_api.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

  int exit_for(fh_status st)
  {
    switch (st) {
    case FH_OK: return 0;
    case FH_ERR_CONFIG:
    case FH_ERR_ARGUMENT:
    case FH_ERR_IO: return 2;
    default: return 1;
    }
  }

  int fail(fh_status st)
  {
    std::fprintf(stderr, "fracheat: %s: %s\n", fh_status_name(st), fh_last_error());
    return exit_for(st);
  }

  // "0.1,0.2,1" -> [0.1, 0.2, 1]
  json parse_point(const std::string& text)
  {
    json pt = json::array();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != item.size())
        throw std::runtime_error("--at: '" + item + "' is not a number");
      pt.push_back(v);
    }
    if (pt.size() < 2)
      throw std::runtime_error("--at: expected x1,...,xn,t");
    return pt;
  }

}

int main(int argc, char** argv)
{
  CLI::App app{"fracheat: kernels, operators and regularity checks for the fractional heat operator"};
  app.set_version_flag("--version", std::string(fh_version()));

  std::string cmd, action, config_path, out_dir;
  std::optional<long long> seed;
  std::optional<int> threads, n;
  std::optional<double> s;
  std::vector<std::string> at;
  bool quick = false;

  app.add_option("command", cmd, "kernel | op | solve | decompose | reg | rescale | selftest")
      ->required()
      ->check(CLI::IsMember({"kernel", "op", "solve", "decompose", "reg", "rescale", "selftest"}));
  app.add_option("action", action, "subcommand action (default: the first one listed in the README)");
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--s", s, "fractional order in (0,1)");
  app.add_option("--n", n, "space dimension");
  app.add_option("--at", at, "evaluation point x1,...,xn,t (repeatable)");
  app.add_flag("--quick", quick, "selftest: reduced sample sizes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::string text;
  std::string base_dir;
  if (!config_path.empty()) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
      std::fprintf(stderr, "fracheat: config error: cannot read '%s'\n", config_path.c_str());
      return 2;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
    base_dir = std::filesystem::path(config_path).parent_path().string();
  }

  json over = json::object();
  if (n)
    over["n"] = *n;
  if (s)
    over["s"] = *s;
  if (seed)
    over["seed"] = *seed;
  if (threads)
    over["threads"] = *threads;
  if (!out_dir.empty())
    over["output_dir"] = out_dir;
  if (quick)
    over["selftest"]["quick"] = true;
  if (!at.empty()) {
    if (cmd != "kernel" && cmd != "op" && cmd != "solve") {
      std::fprintf(stderr, "fracheat: argument error: --at applies to kernel, op and solve only\n");
      return 2;
    }
    json pts = json::array();
    try {
      for (const auto& a : at)
        pts.push_back(parse_point(a));
    } catch (const std::exception& e) {
      std::fprintf(stderr, "fracheat: argument error: %s\n", e.what());
      return 2;
    }
    over[cmd]["points"] = pts;
  }

  // overrides are merged before validation, so a bad --s fails like a bad config value
  json doc = json::object();
  if (!text.empty()) {
    try {
      doc = json::parse(text);
    } catch (const json::exception& e) {
      std::fprintf(stderr, "fracheat: config error: %s: %s\n", config_path.c_str(), e.what());
      return 2;
    }
    if (!doc.is_object()) {
      std::fprintf(stderr, "fracheat: config error: %s: expected a JSON object\n", config_path.c_str());
      return 2;
    }
  }
  doc.merge_patch(over);

  fh_context* ctx = nullptr;
  fh_status st = fh_context_create(doc.dump().c_str(), base_dir.c_str(), &ctx);
  if (st != FH_OK)
    return fail(st);

  int code = 0;
  char* report = nullptr;
  char* console = nullptr;
  st = fh_run_command(ctx, cmd.c_str(), action.c_str(), nullptr, &code, &report, &console);
  fh_context_destroy(ctx);
  if (st != FH_OK)
    return fail(st);
  if (console)
    std::fputs(console, stdout);
  std::fflush(stdout);
  fh_free_string(report);
  fh_free_string(console);
  return code;
}
