#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"

#include "bearingform/analysis.hpp"
#include "bearingform/scenario.hpp"
#include "bearingform/simulator.hpp"

namespace bearingform {

/// Shortest decimal form of `v` that reads back to the same double.
/// Locale independent.
std::string format_double(double v);

/// Header plus one row per sample:
///   t, z1x, z1y, ..., znx, zny, eps1, ..., epsn, V, d_min
void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& trajectory);

/// Reads a trajectory CSV back. Samples carry t, positions, errors, V and
/// d_min; speeds are rebuilt as 0 where every |eps_i| <= deadband and left
/// empty otherwise. Convergence follows the simulator's rule with `tol` and
/// `deadband`. Throws std::runtime_error on malformed input.
TrajectoryRecord read_trajectory_csv(std::istream& in, double tol, double deadband);

/// Per-vehicle polylines (plot/vehicle_<i>.csv: t,x,y) and error series
/// (plot/errors.csv: t, eps1..epsn, V).
void write_plot_data(const std::filesystem::path& dir, const TrajectoryRecord& trajectory);

nlohmann::json validation_json(const FeasibilityReport& report);
nlohmann::json certificate_json(const CertificateReport& report);
nlohmann::json summary_json(const Scenario& scenario, const FeasibilityReport& validation,
                            const TrajectoryRecord& trajectory, const CertificateReport* certificate);

}  // namespace bearingform
