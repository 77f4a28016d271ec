#include "varcap/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace varcap {

using nlohmann::json;

std::vector<std::pair<double, double>> clean_and_normalize(
    const std::vector<ForecastRecord>& records) {
    if (records.empty()) throw insufficient_data_error("no forecast records");
    std::vector<std::pair<double, double>> out;
    out.reserve(records.size());
    for (const ForecastRecord& r : records) {
        if (r.capacity_kw <= 0) throw value_error("capacity must be positive");
        if (r.forecast_kw < 0 || r.actual_kw < 0)
            throw value_error("negative power in forecast record");
        if (r.forecast_kw == 0.0) continue;  // night-time rows carry no error information
        const double f_norm = r.forecast_kw / r.capacity_kw;
        if (f_norm > 1.0 + 1e-12)
            throw value_error("forecast exceeds installed capacity at " + r.timestamp);
        out.emplace_back(std::min(f_norm, 1.0), (r.actual_kw - r.forecast_kw) / r.forecast_kw);
    }
    if (out.empty())
        throw insufficient_data_error("all rows have zero forecast; nothing to fit");
    return out;
}

namespace {

struct BinAcc {
    double lo = 0, hi = 0, sum = 0, sumsq = 0;
    std::size_t count = 0;
};

ErrorBin finish(const BinAcc& a) {
    ErrorBin b;
    b.lo = a.lo;
    b.hi = a.hi;
    b.count = a.count;
    if (a.count > 0) b.mu = a.sum / static_cast<double>(a.count);
    if (a.count > 1) {
        const double var =
            (a.sumsq - static_cast<double>(a.count) * b.mu * b.mu) / static_cast<double>(a.count - 1);
        b.sigma = std::sqrt(std::max(0.0, var));
    }
    return b;
}

}  // namespace

ErrorModel fit_error_model(const std::vector<std::pair<double, double>>& pairs, int n_bins,
                           std::size_t min_count) {
    if (n_bins < 1) throw value_error("n_bins must be at least 1");
    if (pairs.empty() || pairs.size() < min_count)
        throw insufficient_data_error("need at least " + std::to_string(min_count) +
                                      " samples, got " + std::to_string(pairs.size()));

    std::vector<BinAcc> acc(static_cast<std::size_t>(n_bins));
    for (int i = 0; i < n_bins; ++i) {
        acc[i].lo = static_cast<double>(i) / n_bins;
        acc[i].hi = static_cast<double>(i + 1) / n_bins;
    }
    for (const auto& [f, e] : pairs) {
        if (f <= 0 || f > 1) throw value_error("normalized forecast outside (0,1]");
        auto idx = static_cast<std::size_t>(std::ceil(f * n_bins)) - 1;
        idx = std::min(idx, acc.size() - 1);
        acc[idx].count += 1;
        acc[idx].sum += e;
        acc[idx].sumsq += e * e;
    }

    // Merge thin bins into the smaller adjacent one until every bin is populated.
    while (acc.size() > 1) {
        std::size_t i = acc.size();
        for (std::size_t k = 0; k < acc.size(); ++k) {
            if (acc[k].count < min_count) {
                i = k;
                break;
            }
        }
        if (i == acc.size()) break;
        std::size_t j;
        if (i == 0)
            j = 1;
        else if (i + 1 == acc.size())
            j = i - 1;
        else
            j = acc[i - 1].count <= acc[i + 1].count ? i - 1 : i + 1;
        BinAcc merged;
        merged.lo = std::min(acc[i].lo, acc[j].lo);
        merged.hi = std::max(acc[i].hi, acc[j].hi);
        merged.count = acc[i].count + acc[j].count;
        merged.sum = acc[i].sum + acc[j].sum;
        merged.sumsq = acc[i].sumsq + acc[j].sumsq;
        acc[std::min(i, j)] = merged;
        acc.erase(acc.begin() + static_cast<std::ptrdiff_t>(std::max(i, j)));
    }
    if (acc.size() == 1 && acc[0].count < min_count)
        throw insufficient_data_error("fewer than min_count samples in total");

    ErrorModel model;
    model.bins.reserve(acc.size());
    for (const BinAcc& a : acc) model.bins.push_back(finish(a));
    return model;
}

ErrorBin lookup_bin(const ErrorModel& model, double f_norm) {
    if (f_norm == 0.0) return ErrorBin{0.0, 0.0, 0, 0.0, 0.0};  // no generation, no error
    if (f_norm < 0.0 || f_norm > 1.0)
        throw domain_error("normalized forecast " + std::to_string(f_norm) + " outside [0,1]");
    if (model.bins.empty()) throw value_error("empty error model");
    for (const ErrorBin& b : model.bins)
        if (f_norm <= b.hi) return b;
    return model.bins.back();  // f_norm == 1 with fp slack on the last edge
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double inv_norm_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw domain_error("quantile probability must lie in (0,1)");

    // Acklam's rational approximation, then one Newton step on Phi.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    double z;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        z = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        z = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    if (pdf > 0.0) z -= (norm_cdf(z) - p) / pdf;
    return z;
}

double adjust_forecast(const ErrorModel& model, double forecast_kw, double capacity_kw,
                       double probability, double p_cap_kw) {
    if (forecast_kw < 0) throw value_error("forecast must be nonnegative");
    if (capacity_kw <= 0) throw value_error("capacity must be positive");
    if (p_cap_kw <= 0) throw value_error("operational cap must be positive");
    if (forecast_kw == 0.0) return 0.0;
    const double z = inv_norm_cdf(probability);
    const ErrorBin bin = lookup_bin(model, forecast_kw / capacity_kw);
    const double p_hat = forecast_kw * (1.0 + bin.mu + z * bin.sigma);
    return std::clamp(p_hat, 0.0, p_cap_kw);
}

std::vector<ForecastRecord> read_forecast_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open forecast CSV " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw parse_error("empty forecast CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "timestamp,forecast_kw,actual_kw,capacity_kw")
        throw parse_error("unexpected forecast CSV header: " + line);
    std::vector<ForecastRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        ForecastRecord r;
        std::string field;
        try {
            if (!std::getline(ss, r.timestamp, ',')) throw std::invalid_argument("timestamp");
            if (!std::getline(ss, field, ',')) throw std::invalid_argument("forecast_kw");
            r.forecast_kw = std::stod(field);
            if (!std::getline(ss, field, ',')) throw std::invalid_argument("actual_kw");
            r.actual_kw = std::stod(field);
            if (!std::getline(ss, field, ',')) throw std::invalid_argument("capacity_kw");
            r.capacity_kw = std::stod(field);
        } catch (const std::exception&) {
            throw parse_error("bad forecast CSV row at line " + std::to_string(lineno));
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::string error_model_to_json(const ErrorModel& model) {
    json j;
    j["bins"] = json::array();
    for (const ErrorBin& b : model.bins)
        j["bins"].push_back({{"lo", b.lo},
                             {"hi", b.hi},
                             {"count", b.count},
                             {"mu", b.mu},
                             {"sigma", b.sigma}});
    return j.dump(2) + "\n";
}

ErrorModel error_model_from_json(const std::string& json_text) {
    ErrorModel model;
    try {
        const json j = json::parse(json_text);
        for (const auto& jb : j.at("bins")) {
            ErrorBin b;
            b.lo = jb.at("lo").get<double>();
            b.hi = jb.at("hi").get<double>();
            b.count = jb.at("count").get<std::size_t>();
            b.mu = jb.at("mu").get<double>();
            b.sigma = jb.at("sigma").get<double>();
            model.bins.push_back(b);
        }
    } catch (const json::exception& e) {
        throw parse_error(std::string("error-model JSON: ") + e.what());
    }
    if (model.bins.empty()) throw parse_error("error-model JSON has no bins");
    double prev = 0.0;
    for (const ErrorBin& b : model.bins) {
        if (b.sigma < 0) throw value_error("negative sigma in error model");
        if (std::fabs(b.lo - prev) > 1e-12 || b.hi <= b.lo)
            throw value_error("error-model bins must be contiguous over (0,1]");
        prev = b.hi;
    }
    if (std::fabs(prev - 1.0) > 1e-12) throw value_error("error-model bins must cover (0,1]");
    return model;
}

ErrorModel load_error_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open error model " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return error_model_from_json(ss.str());
}

void save_error_model(const ErrorModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw value_error("cannot write " + path.string());
    out << error_model_to_json(model);
}

}  // namespace varcap
