#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "varcap/errors.hpp"

namespace varcap {

struct ForecastRecord {
    std::string timestamp;
    double forecast_kw = 0.0;
    double actual_kw = 0.0;
    double capacity_kw = 0.0;
};

struct ErrorBin {
    double lo = 0.0, hi = 0.0;  // normalized-forecast edges, bin = (lo, hi]
    std::size_t count = 0;
    double mu = 0.0;     // mean relative error
    double sigma = 0.0;  // sample standard deviation (n-1 denominator)
};

/// Per-forecast-level Gaussian relative-error model. Bins are sorted,
/// contiguous, and cover (0, 1]. Immutable after fitting.
struct ErrorModel {
    std::vector<ErrorBin> bins;
};

/// Drops zero-forecast (night) rows and returns (forecast/capacity,
/// (actual-forecast)/forecast) pairs. Throws insufficient_data_error if
/// nothing survives.
std::vector<std::pair<double, double>> clean_and_normalize(
    const std::vector<ForecastRecord>& records);

/// Equal-width bins over (0,1]; under-populated bins are merged with the
/// nearest neighbor until every bin holds at least min_count samples.
ErrorModel fit_error_model(const std::vector<std::pair<double, double>>& pairs,
                           int n_bins = 12, std::size_t min_count = 20);

/// Bin containing f_norm; f_norm == 0 returns a zero-error bin.
ErrorBin lookup_bin(const ErrorModel& model, double f_norm);

/// Standard normal CDF.
double norm_cdf(double z);

/// Standard normal quantile, |Phi(z) - P| <= 1e-9 on (0,1).
/// Rational approximation polished by one Newton step on Phi.
double inv_norm_cdf(double p);

/// Quantile-shifted generation p_hat = forecast*(1 + mu + z(P)*sigma),
/// clamped to [0, p_cap_kw]. forecast == 0 stays 0.
double adjust_forecast(const ErrorModel& model, double forecast_kw,
                       double capacity_kw, double probability, double p_cap_kw);

// --- file formats ---

/// Reads `timestamp,forecast_kw,actual_kw,capacity_kw` CSV.
std::vector<ForecastRecord> read_forecast_csv(const std::filesystem::path& path);

std::string error_model_to_json(const ErrorModel& model);
ErrorModel error_model_from_json(const std::string& json_text);
ErrorModel load_error_model(const std::filesystem::path& path);
void save_error_model(const ErrorModel& model, const std::filesystem::path& path);

}  // namespace varcap
