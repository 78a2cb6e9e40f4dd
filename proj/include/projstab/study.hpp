// study.hpp - configuration parsing, convergence sweeps, stability probes,
// and CSV/JSON report emission.
#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "projstab/scheme.hpp"

namespace projstab {

enum class StudyKind {
    SingleRun,
    SpatialSweep,
    TemporalSweep,
    StabilityProbe,
    ClassicPressureProbe,
};

enum class DtRule { List, ProportionalH, ProportionalH2 };

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line(line) {}
    int line;
};

struct StudySpec {
    StudyKind kind = StudyKind::SingleRun;
    std::vector<int> mesh_resolutions;
    std::vector<double> dt_list;
    DtRule dt_rule = DtRule::List;
    double dt_constant = 1.0;
    int probe_steps = 200;
    std::string output_prefix;

    SchemeConfig scheme;
    std::string mms_name = "taylor_green";  // taylor_green | zero
    double amplitude = 1.0;
    TimeProfile time_profile = TimeProfile::Cosine;

    // Optional expected-order / bound assertions keyed by name, e.g.
    // velocity_l2_order_min. Unknown names are rejected at parse time.
    std::map<std::string, double> assertions;
};

StudySpec parse_config(const std::string& path);
StudySpec parse_config_text(const std::string& text);
std::string emit_config(const StudySpec& spec);
bool operator==(const StudySpec& a, const StudySpec& b);

struct SweepRow {
    std::string study;
    int n = 0;
    double h = 0.0;
    double dt = 0.0;
    double delta = 0.0;
    double nu = 0.0;
    std::string scheme;  // "classic" | "modified"
    double a_l2 = 0.0, a_h1 = 0.0, a_h1w = 0.0, a_p = 0.0;
    double l2_final = 0.0, h1_final = 0.0, p_l2_final = 0.0;
    bool diverged = false;
    long cg_iters_total = 0;
    double wall_time_s = 0.0;
    double max_step_velocity_l2 = 0.0;  // probes
};

struct AssertionResult {
    std::string name;
    double observed = 0.0;
    double bound = 0.0;
    bool is_lower_bound = false;
    bool pass = false;
};

struct StudyResult {
    std::vector<SweepRow> rows;
    std::map<std::string, double> observed_orders;
    std::vector<AssertionResult> assertions;
    std::map<std::string, double> extras;
    std::string csv_path;
    std::string json_path;
    int exit_status = 0;  // 0 pass, 1 assertion failure (2 = error, via exceptions)
};

StudyResult run_study(const StudySpec& spec);

// CSV body for a row set (header line + data lines, no timestamp comment).
std::string format_csv_body(const std::vector<SweepRow>& rows);

} // namespace projstab
