#include "sbreak.h"

#include <cstring>
#include <new>
#include <string>

#include "sbreak/io.hpp"

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
int guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return SB_OK;
  } catch (const sbreak::ConfigError& e) {
    g_last_error = e.what();
    return SB_ERR_CONFIG;
  } catch (const sbreak::DataError& e) {
    g_last_error = e.what();
    return SB_ERR_DATA;
  } catch (const sbreak::NumericError& e) {
    g_last_error = e.what();
    return SB_ERR_NUMERIC;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SB_ERR_NUMERIC;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SB_ERR_NUMERIC;
  }
}

std::string opt_str(const char* s) { return s ? std::string(s) : std::string(); }

}  // namespace

struct sb_dataset {
  sbreak::Dataset ds;
};

extern "C" {

const char* sb_last_error(void) { return g_last_error.c_str(); }

void sb_string_free(char* s) { delete[] s; }

int sb_dataset_read_csv(const char* path, const char* schema_json,
                        sb_dataset** out) {
  return guarded([&] {
    if (!path || !out) throw sbreak::ConfigError("null argument");
    auto schema = sbreak::io::parse_csv_schema(opt_str(schema_json));
    *out = new sb_dataset{sbreak::io::read_dataset_csv(path, schema)};
  });
}

int sb_dataset_create(const double* y, const double* X, const double* R, int T,
                      int d_x, int d_z, sb_dataset** out) {
  return guarded([&] {
    if (!y || !X || !R || !out) throw sbreak::ConfigError("null argument");
    if (T <= 0 || d_x <= 0 || d_z <= 0)
      throw sbreak::ConfigError("dimensions must be positive");
    Eigen::Map<const Eigen::VectorXd> ym(y, T);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        Xm(X, T, d_x), Rm(R, d_x, d_z);
    *out = new sb_dataset{sbreak::Dataset(ym, Xm, Rm)};
  });
}

int sb_dataset_write_csv(const sb_dataset* ds, const char* path) {
  return guarded([&] {
    if (!ds || !path) throw sbreak::ConfigError("null argument");
    sbreak::io::write_dataset_csv(ds->ds, path);
  });
}

int sb_dataset_dims(const sb_dataset* ds, int* T, int* d_x, int* d_z) {
  return guarded([&] {
    if (!ds) throw sbreak::ConfigError("null dataset");
    if (T) *T = ds->ds.T();
    if (d_x) *d_x = ds->ds.dx();
    if (d_z) *d_z = ds->ds.dz();
  });
}

void sb_dataset_free(sb_dataset* ds) { delete ds; }

int sb_fit(const sb_dataset* ds, const char* options_json, char** report_json) {
  return guarded([&] {
    if (!ds || !report_json) throw sbreak::ConfigError("null argument");
    auto opt = sbreak::io::parse_fit_options(opt_str(options_json));
    *report_json = dup_string(sbreak::io::fit_report_json(ds->ds, opt));
  });
}

int sb_posterior(const sb_dataset* ds, const char* options_json,
                 const char* truth_json, char** report_json) {
  return guarded([&] {
    if (!ds || !report_json) throw sbreak::ConfigError("null argument");
    auto opt = sbreak::io::parse_fit_options(opt_str(options_json));
    *report_json = dup_string(
        sbreak::io::posterior_report_json(ds->ds, opt, opt_str(truth_json)));
  });
}

int sb_simulate(const char* options_json, char** report_json) {
  return guarded([&] {
    if (!report_json) throw sbreak::ConfigError("null argument");
    auto opt = sbreak::io::parse_simulate_options(opt_str(options_json));
    *report_json = dup_string(sbreak::io::simulate_report_json(opt));
  });
}

int sb_wstar(const char* config_json, char** report_json) {
  return guarded([&] {
    if (!report_json) throw sbreak::ConfigError("null argument");
    *report_json =
        dup_string(sbreak::io::wstar_report_json(opt_str(config_json)));
  });
}

}  // extern "C"
