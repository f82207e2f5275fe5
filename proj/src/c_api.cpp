#include "fracheat/c_api.h"
#include "fracheat/acceptance.h"
#include "fracheat/catalog.h"
#include "fracheat/commands.h"
#include "fracheat/config.h"
#include "fracheat/errors.h"
#include "fracheat/grid_field.h"
#include "fracheat/kernel.h"
#include "fracheat/master_operator.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

using namespace fracheat;
using nlohmann::json;

struct fh_context {
  json doc;
  std::string base_dir;
  RunConfig cfg;
};

struct fh_field {
  int n = 1;
  CatalogField cf;
};

struct fh_grid {
  std::shared_ptr<GridField> g;
};

namespace {

  thread_local std::string g_last_error;

  fh_status to_status(ErrorKind k) { return static_cast<fh_status>(static_cast<int>(k)); }

  template <class F>
  fh_status guard(F&& body)
  {
    try {
      body();
      return FH_OK;
    } catch (const Error& e) {
      g_last_error = e.what();
      return to_status(e.kind());
    } catch (const json::exception& e) {
      g_last_error = std::string("json: ") + e.what();
      return FH_ERR_CONFIG;
    } catch (const std::bad_alloc&) {
      g_last_error = "out of memory";
      return FH_ERR_INTERNAL;
    } catch (const std::exception& e) {
      g_last_error = e.what();
      return FH_ERR_INTERNAL;
    } catch (...) {
      g_last_error = "unknown error";
      return FH_ERR_INTERNAL;
    }
  }

  char* dup(const std::string& s)
  {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p)
      throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
  }

  void need(const void* p, const char* what)
  {
    if (!p)
      throw ArgumentError(std::string(what) + " is NULL");
  }

}

extern "C" {

const char* fh_version(void) { return "0.1.0"; }

const char* fh_last_error(void) { return g_last_error.c_str(); }

const char* fh_status_name(fh_status s)
{
  switch (s) {
  case FH_OK: return "ok";
  case FH_ERR_DOMAIN: return "domain error";
  case FH_ERR_CONFIG: return "config error";
  case FH_ERR_ADMISSIBILITY: return "admissibility error";
  case FH_ERR_DIVERGENCE: return "divergence error";
  case FH_ERR_INVARIANT: return "invariant failure";
  case FH_ERR_IO: return "i/o error";
  case FH_ERR_ARGUMENT: return "argument error";
  case FH_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void fh_free_string(char* s) { std::free(s); }

fh_status fh_context_create(const char* config_json, const char* base_dir, fh_context** out)
{
  return guard([&] {
    need(out, "out");
    *out = nullptr;
    auto ctx = std::make_unique<fh_context>();
    const std::string text = config_json ? config_json : "";
    try {
      ctx->doc = text.empty() ? json::object() : json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config: not valid JSON: ") + e.what());
    }
    ctx->base_dir = base_dir ? base_dir : "";
    ctx->cfg = parse_config(ctx->doc, ctx->base_dir);
    *out = ctx.release();
  });
}

void fh_context_destroy(fh_context* ctx) { delete ctx; }

fh_status fh_context_describe(const fh_context* ctx, char** json_out)
{
  return guard([&] {
    need(ctx, "ctx");
    need(json_out, "json_out");
    const auto& c = ctx->cfg;
    json fields = json::object();
    for (const auto& [k, v] : c.fields)
      fields[k] = v;
    json j{{"n", c.frac.n}, {"s", c.frac.s}, {"c_ns", c.frac.c_ns}, {"seed", c.seed}, {"threads", c.threads},
           {"output_dir", c.output_dir},
           {"quadrature", json{{"r_cut", c.quad.r_cut}, {"r_max", c.quad.r_max},
                               {"panels_per_decade", c.quad.panels_per_decade}, {"gh_order", c.quad.gh_order},
                               {"rel_tol", c.quad.rel_tol}}},
           {"fields", fields}};
    *json_out = dup(j.dump(2));
  });
}

fh_status fh_run_command(fh_context* ctx, const char* cmd, const char* action, const char* overrides_json,
                         int* exit_code, char** report_json, char** console_text)
{
  return guard([&] {
    need(ctx, "ctx");
    need(cmd, "cmd");
    if (report_json)
      *report_json = nullptr;
    if (console_text)
      *console_text = nullptr;
    const RunConfig* cfg = &ctx->cfg;
    RunConfig local;
    if (overrides_json && *overrides_json) {
      json patch;
      try {
        patch = json::parse(overrides_json);
      } catch (const json::parse_error& e) {
        throw ConfigError(std::string("overrides: not valid JSON: ") + e.what());
      }
      if (!patch.is_object())
        throw ConfigError("overrides: expected an object");
      json doc = ctx->doc;
      doc.merge_patch(patch);
      local = parse_config(doc, ctx->base_dir);
      cfg = &local;
    }
    const auto res = run_subcommand(cmd, action ? action : "", *cfg);
    if (exit_code)
      *exit_code = res.exit_code;
    if (report_json)
      *report_json = dup(res.report);
    if (console_text)
      *console_text = dup(res.console);
  });
}

fh_status fh_kernel_eval(int n, double s, const double* dx, double dt, double* out)
{
  return guard([&] {
    need(dx, "dx");
    need(out, "out");
    const auto p = FracParams::make(n, s);
    *out = eval_kernel(p, std::span<const double>(dx, n), dt);
  });
}

fh_status fh_field_create(const fh_context* ctx, const char* name, fh_field** out)
{
  return guard([&] {
    need(ctx, "ctx");
    need(name, "name");
    need(out, "out");
    *out = nullptr;
    const auto it = ctx->cfg.fields.find(name);
    if (it == ctx->cfg.fields.end())
      throw ArgumentError(std::string("no field named '") + name + "'");
    auto f = std::make_unique<fh_field>();
    f->n = ctx->cfg.frac.n;
    f->cf = build_field(it->second, CatalogContext{ctx->cfg.frac, ctx->cfg.quad, ctx->base_dir},
                        std::string("fields.") + name);
    *out = f.release();
  });
}

void fh_field_destroy(fh_field* f) { delete f; }

fh_status fh_field_eval(const fh_field* f, const double* x, double t, double* out)
{
  return guard([&] {
    need(f, "field");
    need(x, "x");
    need(out, "out");
    *out = f->cf.field(std::span<const double>(x, f->n), t);
  });
}

fh_status fh_apply_master(const fh_context* ctx, const fh_field* f, const double* x, double t, double* value,
                          double* error_estimate)
{
  return guard([&] {
    need(ctx, "ctx");
    need(f, "field");
    need(x, "x");
    need(value, "value");
    if (f->n != ctx->cfg.frac.n)
      throw ArgumentError("field and context differ in dimension");
    const auto r = apply_master(ctx->cfg.frac, f->cf.field, std::span<const double>(x, f->n), t, ctx->cfg.quad);
    *value = r.value;
    if (error_estimate)
      *error_estimate = r.error_estimate;
  });
}

fh_status fh_grid_load(const char* manifest_path, fh_grid** out)
{
  return guard([&] {
    need(manifest_path, "manifest_path");
    need(out, "out");
    *out = nullptr;
    auto g = std::make_unique<fh_grid>();
    g->g = std::make_shared<GridField>(load_grid(manifest_path));
    *out = g.release();
  });
}

fh_status fh_grid_save(const fh_grid* g, const char* manifest_path)
{
  return guard([&] {
    need(g, "grid");
    need(manifest_path, "manifest_path");
    save_grid(*g->g, manifest_path);
  });
}

void fh_grid_destroy(fh_grid* g) { delete g; }

fh_status fh_grid_info(const fh_grid* g, int* n, long* size)
{
  return guard([&] {
    need(g, "grid");
    if (n)
      *n = g->g->n();
    if (size)
      *size = static_cast<long>(g->g->values.size());
  });
}

fh_status fh_grid_values(const fh_grid* g, const double** values)
{
  return guard([&] {
    need(g, "grid");
    need(values, "values");
    *values = g->g->values.data();
  });
}

fh_status fh_grid_interpolate(const fh_grid* g, const double* x, double t, double* out)
{
  return guard([&] {
    need(g, "grid");
    need(x, "x");
    need(out, "out");
    *out = g->g->interpolate(std::span<const double>(x, g->g->n()), t);
  });
}

fh_status fh_selftest_criterion(int id, int quick, int threads, int* passed, char** summary)
{
  return guard([&] {
    need(passed, "passed");
    if (summary)
      *summary = nullptr;
    AcceptanceOptions opt;
    opt.quick = quick != 0;
    opt.threads = threads > 0 ? threads : 1;
    const auto r = run_criterion(id, opt);
    *passed = r.pass ? 1 : 0;
    if (summary)
      *summary = dup(r.summary);
  });
}

}
