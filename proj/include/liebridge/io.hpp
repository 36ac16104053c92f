#pragma once

#include "liebridge/bridge_control.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace liebridge {

// Shortest round-trippable decimal form (printf %.17g, C locale).
std::string format_g17(double value);

// All writers emit a fixed header row, one data row per node, values at 17
// significant digits, LF line endings; they throw std::runtime_error when the
// file cannot be opened.

// header: node,weight,rho_opt
void write_density_csv(const std::filesystem::path& path, const DensityGrid& rho);

// header: node,omega_opt
void write_control_csv(const std::filesystem::path& path, const GroupGrid& grid,
                       const Eigen::ArrayXd& control_radial);

// header: iteration,dH_residual (iterations numbered from 1)
void write_convergence_csv(const std::filesystem::path& path,
                           const std::vector<double>& dh_trace);

// Ridgeline waterfall of rho_opt over the solution's time grid: one polyline
// per time sample, t=0 (green) at the top and t=1 (red, dashed) at the
// bottom, axis ticks in units of pi.  Self-contained static SVG.
void write_solution_svg(const std::filesystem::path& path, const BridgeSolution& sol);

}  // namespace liebridge
