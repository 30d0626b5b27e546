#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace scmlab {

/// Aligned demand/PV time series at a uniform interval length.
struct PowerProfile {
    std::int64_t start_epoch = 0;  // seconds
    double dt_hours = 0.5;
    std::vector<double> demand_kw;
    std::vector<double> pv_kw;

    std::size_t size() const { return demand_kw.size(); }
    int steps_per_day() const;

    /// Throws std::invalid_argument on any violated invariant.
    void validate() const;
};

struct ColumnMap {
    std::string timestamp = "timestamp";
    std::string demand = "demand_kw";
    std::string pv = "pv_kw";
};

/// Parse a CSV profile. Timestamps may be epoch seconds or ISO-8601; spacing
/// must be uniform (dt is inferred from it). Errors carry the offending row.
PowerProfile load_profile(const std::filesystem::path& path, const ColumnMap& columns = {});

/// Write the canonical CSV form (epoch seconds, full double precision).
/// load_profile(save_profile(p)) round-trips bit-identically.
void save_profile(const PowerProfile& p, const std::filesystem::path& path);

/// Downsample to a coarser grid by bucket means. target must be an integer
/// multiple of p.dt_hours and the length must divide evenly.
PowerProfile resample(const PowerProfile& p, double target_dt_hours);

struct SynthParams {
    int days = 7;
    double dt_hours = 0.5;
    double demand_base_kw = 1.0;
    double pv_peak_kw = 3.0;
    double noise_std_kw = 0.1;
    std::uint64_t seed = 0;
};

/// Deterministic synthetic profile: double-peak diurnal demand plus a daylight
/// sine PV bump, both with seeded gaussian noise and clipped at zero.
PowerProfile synth_profile(const SynthParams& params);

}  // namespace scmlab
