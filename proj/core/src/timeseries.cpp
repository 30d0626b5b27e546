#include "scmlab/timeseries.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace scmlab {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim whitespace and a possible trailing \r
        auto b = field.find_first_not_of(" \t\r");
        auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool looks_numeric(const std::string& s) {
    if (s.empty()) return false;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end && *end == '\0';
}

std::int64_t parse_timestamp(const std::string& s, std::size_t row) {
    if (looks_numeric(s)) {
        return static_cast<std::int64_t>(std::llround(std::strtod(s.c_str(), nullptr)));
    }
    std::tm tm{};
    for (const char* fmt : {"%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"}) {
        std::istringstream is(s);
        is >> std::get_time(&tm, fmt);
        if (!is.fail()) return static_cast<std::int64_t>(timegm(&tm));
    }
    throw std::invalid_argument("row " + std::to_string(row) + ": unparseable timestamp '" + s + "'");
}

double parse_power(const std::string& s, const std::string& col, std::size_t row) {
    if (!looks_numeric(s))
        throw std::invalid_argument("row " + std::to_string(row) + ": non-numeric " + col +
                                    " value '" + s + "'");
    const double v = std::strtod(s.c_str(), nullptr);
    if (!std::isfinite(v))
        throw std::invalid_argument("row " + std::to_string(row) + ": non-finite " + col + " value");
    if (v < 0.0)
        throw std::invalid_argument("row " + std::to_string(row) + ": negative " + col + " value");
    return v;
}

// Deterministic gaussian: xoshiro-free, just mt19937_64 bits + Box-Muller.
class GaussianGen {
public:
    explicit GaussianGen(std::uint64_t seed) : state_(seed ^ 0x9e3779b97f4a7c15ull) {}

    double next(double std_dev) {
        if (std_dev <= 0.0) return 0.0;
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std_dev * std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    double uniform01() {
        // splitmix64 step; never returns 0
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        z ^= z >> 31;
        return (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t state_;
};

}  // namespace

int PowerProfile::steps_per_day() const {
    return static_cast<int>(std::llround(24.0 / dt_hours));
}

void PowerProfile::validate() const {
    if (demand_kw.size() != pv_kw.size())
        throw std::invalid_argument("PowerProfile: demand/pv length mismatch");
    if (demand_kw.empty()) throw std::invalid_argument("PowerProfile: empty");
    if (!(dt_hours > 0.0)) throw std::invalid_argument("PowerProfile: dt_hours must be > 0");
    for (std::size_t i = 0; i < demand_kw.size(); ++i) {
        if (!std::isfinite(demand_kw[i]) || demand_kw[i] < 0.0)
            throw std::invalid_argument("PowerProfile: bad demand at index " + std::to_string(i));
        if (!std::isfinite(pv_kw[i]) || pv_kw[i] < 0.0)
            throw std::invalid_argument("PowerProfile: bad pv at index " + std::to_string(i));
    }
}

PowerProfile load_profile(const std::filesystem::path& path, const ColumnMap& columns) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open profile file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty profile file: " + path.string());
    const auto header = split_csv_line(line);

    auto find_col = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw std::invalid_argument("missing column '" + name + "' in " + path.string());
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t ts_col = find_col(columns.timestamp);
    const std::size_t d_col = find_col(columns.demand);
    const std::size_t pv_col = find_col(columns.pv);

    PowerProfile p;
    std::vector<std::int64_t> stamps;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        const std::size_t need = std::max({ts_col, d_col, pv_col}) + 1;
        if (fields.size() < need)
            throw std::invalid_argument("row " + std::to_string(row) + ": too few fields");
        stamps.push_back(parse_timestamp(fields[ts_col], row));
        p.demand_kw.push_back(parse_power(fields[d_col], columns.demand, row));
        p.pv_kw.push_back(parse_power(fields[pv_col], columns.pv, row));
    }
    if (stamps.empty()) throw std::invalid_argument("no data rows in " + path.string());
    if (stamps.size() < 2)
        throw std::invalid_argument("need at least 2 rows to infer dt in " + path.string());

    const std::int64_t step = stamps[1] - stamps[0];
    if (step <= 0) throw std::invalid_argument("row 2: timestamps not strictly increasing");
    for (std::size_t i = 2; i < stamps.size(); ++i) {
        if (stamps[i] - stamps[i - 1] != step)
            throw std::invalid_argument("row " + std::to_string(i + 1) +
                                        ": non-uniform timestamp spacing");
    }
    p.start_epoch = stamps[0];
    p.dt_hours = static_cast<double>(step) / 3600.0;
    p.validate();
    return p;
}

void save_profile(const PowerProfile& p, const std::filesystem::path& path) {
    p.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write profile file: " + path.string());
    out << "timestamp,demand_kw,pv_kw\n";
    const auto step = static_cast<std::int64_t>(std::llround(p.dt_hours * 3600.0));
    char buf[64];
    for (std::size_t i = 0; i < p.size(); ++i) {
        out << (p.start_epoch + static_cast<std::int64_t>(i) * step);
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g", p.demand_kw[i], p.pv_kw[i]);
        out << buf << '\n';
    }
}

PowerProfile resample(const PowerProfile& p, double target_dt_hours) {
    p.validate();
    const double ratio_d = target_dt_hours / p.dt_hours;
    const auto ratio = static_cast<std::size_t>(std::llround(ratio_d));
    if (ratio < 1 || std::abs(ratio_d - static_cast<double>(ratio)) > 1e-9)
        throw std::invalid_argument("resample: target dt is not an integer multiple of input dt");
    if (ratio == 1) return p;
    if (p.size() % ratio != 0)
        throw std::invalid_argument("resample: trailing partial bucket (length " +
                                    std::to_string(p.size()) + " not divisible by " +
                                    std::to_string(ratio) + ")");

    PowerProfile out;
    out.start_epoch = p.start_epoch;
    out.dt_hours = target_dt_hours;
    const std::size_t n = p.size() / ratio;
    out.demand_kw.reserve(n);
    out.pv_kw.reserve(n);
    for (std::size_t b = 0; b < n; ++b) {
        double d = 0.0, v = 0.0;
        for (std::size_t k = 0; k < ratio; ++k) {
            d += p.demand_kw[b * ratio + k];
            v += p.pv_kw[b * ratio + k];
        }
        out.demand_kw.push_back(d / static_cast<double>(ratio));
        out.pv_kw.push_back(v / static_cast<double>(ratio));
    }
    return out;
}

PowerProfile synth_profile(const SynthParams& params) {
    if (params.days < 1) throw std::invalid_argument("synth_profile: days must be >= 1");
    if (params.demand_base_kw < 0.0 || params.pv_peak_kw < 0.0 || params.noise_std_kw < 0.0)
        throw std::invalid_argument("synth_profile: magnitudes must be >= 0");
    const double steps_d = 24.0 / params.dt_hours;
    const auto steps = static_cast<int>(std::llround(steps_d));
    if (steps < 1 || std::abs(steps_d - static_cast<double>(steps)) > 1e-9)
        throw std::invalid_argument("synth_profile: dt_hours must divide 24 h");

    PowerProfile p;
    p.start_epoch = 0;
    p.dt_hours = params.dt_hours;
    GaussianGen noise(params.seed);
    for (int day = 0; day < params.days; ++day) {
        for (int s = 0; s < steps; ++s) {
            const double h = (static_cast<double>(s) + 0.5) * params.dt_hours;
            // morning and evening peaks on a flat base
            const double shape = 0.6 + 0.9 * std::exp(-0.5 * std::pow((h - 8.0) / 1.8, 2)) +
                                 1.3 * std::exp(-0.5 * std::pow((h - 19.0) / 2.2, 2));
            const double demand = params.demand_base_kw * shape + noise.next(params.noise_std_kw);
            const double sun = std::sin(std::numbers::pi * (h - 6.0) / 12.0);
            const double pv_clear = params.pv_peak_kw * std::max(0.0, sun);
            // noise only while the panel produces, so nights (and pv_peak = 0) stay exactly 0
            const double pv = pv_clear > 0.0 ? pv_clear + noise.next(params.noise_std_kw) : 0.0;
            p.demand_kw.push_back(std::max(0.0, demand));
            p.pv_kw.push_back(std::max(0.0, pv));
        }
    }
    return p;
}

}  // namespace scmlab
