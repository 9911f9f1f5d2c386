#include "comorec.h"

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <string>

#include "errors.hpp"
#include "model.hpp"
#include "runner.hpp"

// One message slot per thread, LightGBM style: the pointer handed out stays
// valid until the same thread's next failing call.
namespace {

thread_local std::string g_last_error = "no error";

void set_error(const std::string& message) { g_last_error = message; }

template <typename F>
int guarded(F&& f) {
  try {
    f();
    return COMOREC_OK;
  } catch (const comorec::UsageError& e) {
    set_error(e.what());
    return COMOREC_ERROR_USAGE;
  } catch (const comorec::DataError& e) {
    set_error(e.what());
    return COMOREC_ERROR_DATA;
  } catch (const comorec::NumericError& e) {
    set_error(e.what());
    return COMOREC_ERROR_NUMERIC;
  } catch (const std::exception& e) {
    set_error(std::string("internal error: ") + e.what());
    return COMOREC_ERROR_NUMERIC;
  }
}

int require(bool ok, const char* message) {
  if (!ok) {
    set_error(message);
    return COMOREC_ERROR_USAGE;
  }
  return COMOREC_OK;
}

char* copy_string(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (out != nullptr) {
    std::memcpy(out, text.c_str(), text.size() + 1);
  }
  return out;
}

}  // namespace

struct comorec_model {
  comorec::Model impl;
};

extern "C" {

const char* comorec_version(void) { return "0.1.0"; }

const char* comorec_last_error(void) { return g_last_error.c_str(); }

int comorec_synth(const char* config_json, const char* out_dir) {
  if (int rc = require(config_json != nullptr, "config_json must not be NULL")) return rc;
  if (int rc = require(out_dir != nullptr, "out_dir must not be NULL")) return rc;
  return guarded([&] {
    auto config = comorec::runner::parse_synth_config(config_json, "config");
    comorec::runner::run_synth(config, out_dir, std::cerr);
  });
}

int comorec_train(const char* config_json) {
  if (int rc = require(config_json != nullptr, "config_json must not be NULL")) return rc;
  return guarded([&] {
    auto options = comorec::runner::parse_train_options(config_json, "config");
    comorec::runner::run_train(options, std::cerr);
  });
}

int comorec_eval(const char* config_json, char** report_json) {
  if (int rc = require(config_json != nullptr, "config_json must not be NULL")) return rc;
  return guarded([&] {
    auto options = comorec::runner::parse_eval_options(config_json, "config");
    std::string report = comorec::runner::run_eval(options, std::cerr);
    if (report_json != nullptr) {
      *report_json = copy_string(report);
      if (*report_json == nullptr) {
        throw comorec::NumericError("out of memory copying the report");
      }
    }
  });
}

int comorec_model_load(const char* path, comorec_model** out_model) {
  if (int rc = require(path != nullptr, "path must not be NULL")) return rc;
  if (int rc = require(out_model != nullptr, "out_model must not be NULL")) return rc;
  return guarded([&] {
    auto* handle = new comorec_model{comorec::load_model(path)};
    *out_model = handle;
  });
}

void comorec_model_free(comorec_model* model) { delete model; }

int comorec_model_kind(const comorec_model* model, char* buffer, size_t buffer_size) {
  if (int rc = require(model != nullptr, "model must not be NULL")) return rc;
  if (int rc = require(buffer != nullptr, "buffer must not be NULL")) return rc;
  return guarded([&] {
    std::string kind = comorec::to_string(model->impl.kind);
    if (buffer_size < kind.size() + 1) {
      throw comorec::UsageError("buffer too small for model kind");
    }
    std::memcpy(buffer, kind.c_str(), kind.size() + 1);
  });
}

int comorec_model_score(const comorec_model* model, const char* subject_id,
                        const char* icd9_code, const char* symptom_term,
                        double* out_probability) {
  if (int rc = require(model != nullptr, "model must not be NULL")) return rc;
  if (int rc = require(subject_id != nullptr, "subject_id must not be NULL")) return rc;
  if (int rc = require(icd9_code != nullptr, "icd9_code must not be NULL")) return rc;
  if (int rc = require(out_probability != nullptr, "out_probability must not be NULL")) return rc;
  return guarded([&] {
    const comorec::Model& m = model->impl;
    if (!m.subjects.contains(subject_id)) {
      throw comorec::DataError(std::string("unknown subject: ") + subject_id);
    }
    if (!m.codes.contains(icd9_code)) {
      throw comorec::DataError(std::string("unknown code: ") + icd9_code);
    }
    std::optional<uint32_t> symptom;
    if (m.kind == comorec::ModelKind::Dhf) {
      if (symptom_term == nullptr) {
        throw comorec::UsageError("a dhf model requires symptom_term");
      }
      if (!m.symptoms.contains(symptom_term)) {
        throw comorec::DataError(std::string("unknown symptom: ") + symptom_term);
      }
      symptom = m.symptoms.encode(symptom_term);
    }
    *out_probability =
        comorec::predict(m, m.subjects.encode(subject_id), m.codes.encode(icd9_code), symptom);
  });
}

void comorec_string_free(char* text) { std::free(text); }

}  // extern "C"
