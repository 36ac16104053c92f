#include "liebridge/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace liebridge {

namespace {

std::ofstream open_or_throw(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary: LF endings everywhere
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

void close_or_throw(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// x pixel for an angle, y pixel for a (row, value) pair of the waterfall.
// Row 0 sits at the top with `headroom` pixels above its baseline; the
// amplitude never exceeds the headroom, so no curve leaves the plot area.
struct SvgLayout {
  double x0 = 70.0, y0 = 40.0;  // top-left of the plot area
  double width = 860.0, height = 550.0;
  double headroom = 60.0;
  double domain = 1.0;   // angle extent
  double row_step = 0.0;  // vertical distance between baselines
  double amplitude = 0.0;  // pixels per density unit

  double x(double angle) const { return x0 + angle / domain * width; }
  double y(std::size_t row, double value) const {
    return y0 + headroom + static_cast<double>(row) * row_step - value * amplitude;
  }
};

std::string rgb_lerp(int r0, int g0, int b0, int r1, int g1, int b1, double t) {
  const auto mix = [t](int a, int b) {
    return static_cast<int>(std::lround(a + (b - a) * t));
  };
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", mix(r0, r1), mix(g0, g1), mix(b0, b1));
  return buf;
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string format_g17(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_density_csv(const std::filesystem::path& path, const DensityGrid& rho) {
  if (!rho.grid) throw std::invalid_argument("write_density_csv: null grid");
  std::ofstream out = open_or_throw(path);
  out << "node,weight,rho_opt\n";
  for (Eigen::Index i = 0; i < rho.values.size(); ++i)
    out << format_g17(rho.grid->nodes[i]) << ',' << format_g17(rho.grid->weights[i]) << ','
        << format_g17(rho.values[i]) << '\n';
  close_or_throw(out, path);
}

void write_control_csv(const std::filesystem::path& path, const GroupGrid& grid,
                       const Eigen::ArrayXd& control_radial) {
  if (control_radial.size() != static_cast<Eigen::Index>(grid.size()))
    throw std::invalid_argument("write_control_csv: size does not match grid");
  std::ofstream out = open_or_throw(path);
  out << "node,omega_opt\n";
  for (Eigen::Index i = 0; i < control_radial.size(); ++i)
    out << format_g17(grid.nodes[i]) << ',' << format_g17(control_radial[i]) << '\n';
  close_or_throw(out, path);
}

void write_convergence_csv(const std::filesystem::path& path,
                           const std::vector<double>& dh_trace) {
  std::ofstream out = open_or_throw(path);
  out << "iteration,dH_residual\n";
  for (std::size_t k = 0; k < dh_trace.size(); ++k)
    out << (k + 1) << ',' << format_g17(dh_trace[k]) << '\n';
  close_or_throw(out, path);
}

void write_solution_svg(const std::filesystem::path& path, const BridgeSolution& sol) {
  if (sol.rho_opt.empty() || !sol.problem)
    throw std::invalid_argument("write_solution_svg: empty solution");
  const GroupGrid& grid = sol.problem->grid();
  const std::size_t rows = sol.rho_opt.size();

  SvgLayout lay;
  lay.domain = grid.domain_length();
  lay.row_step =
      rows > 1 ? (lay.height - lay.headroom) / static_cast<double>(rows - 1) : 0.0;
  double max_rho = 0.0;
  for (const DensityGrid& rho : sol.rho_opt) max_rho = std::max(max_rho, rho.values.maxCoeff());
  // Peaks may overlap up to ~2.4 rows (the ridgeline look) but stay within
  // the top headroom.
  lay.amplitude = std::min(2.4 * lay.row_step, lay.headroom) / max_rho;
  if (rows == 1) lay.amplitude = lay.headroom / max_rho;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"960\" height=\"640\" "
         "viewBox=\"0 0 960 640\">\n"
      << "<rect width=\"960\" height=\"640\" fill=\"white\"/>\n"
      << "<text x=\"480\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">optimal density evolution ("
      << (grid.group == GroupId::so2 ? "SO(2), angle" : "SO(3), rotation angle")
      << " vs t)</text>\n";

  // back-to-front so later times overdraw earlier ones
  for (std::size_t k = 0; k < rows; ++k) {
    const double tfrac = rows > 1 ? static_cast<double>(k) / (rows - 1) : 0.0;
    std::string color = rgb_lerp(0x2c, 0xa0, 0x2c, 0xd6, 0x27, 0x28, tfrac);
    const bool endpoint = k == 0 || k + 1 == rows;
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
        << (endpoint ? "2.0" : "1.0") << "\""
        << (k + 1 == rows ? " stroke-dasharray=\"6 3\"" : "") << " points=\"";
    const Eigen::ArrayXd& v = sol.rho_opt[k].values;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      svg << fmt2(lay.x(grid.nodes[i])) << ',' << fmt2(lay.y(k, v[i])) << ' ';
    }
    if (grid.group == GroupId::so2)  // close the period
      svg << fmt2(lay.x(lay.domain)) << ',' << fmt2(lay.y(k, v[0]));
    svg << "\"/>\n";
    if (endpoint || k % std::max<std::size_t>(1, rows / 7) == 0)
      svg << "<text x=\"" << fmt2(lay.x0 - 8) << "\" y=\"" << fmt2(lay.y(k, 0.0) + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">t="
          << fmt2(sol.time_grid[k]) << "</text>\n";
  }

  // x axis with ticks in units of pi
  const double axis_y = lay.y0 + lay.height + 18.0;
  svg << "<line x1=\"" << fmt2(lay.x0) << "\" y1=\"" << fmt2(axis_y) << "\" x2=\""
      << fmt2(lay.x0 + lay.width) << "\" y2=\"" << fmt2(axis_y)
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  const int n_ticks = grid.group == GroupId::so2 ? 4 : 4;
  for (int j = 0; j <= n_ticks; ++j) {
    const double a = lay.domain * j / n_ticks;
    static const char* so2_labels[] = {"0", "pi/2", "pi", "3pi/2", "2pi"};
    static const char* so3_labels[] = {"0", "pi/4", "pi/2", "3pi/4", "pi"};
    const char* label = grid.group == GroupId::so2 ? so2_labels[j] : so3_labels[j];
    svg << "<line x1=\"" << fmt2(lay.x(a)) << "\" y1=\"" << fmt2(axis_y) << "\" x2=\""
        << fmt2(lay.x(a)) << "\" y2=\"" << fmt2(axis_y + 5) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << fmt2(lay.x(a)) << "\" y=\"" << fmt2(axis_y + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << label
        << "</text>\n";
  }

  svg << "<text x=\"" << fmt2(lay.x0 + lay.width) << "\" y=\"36\" text-anchor=\"end\" "
         "font-family=\"sans-serif\" font-size=\"11\" fill=\"#2ca02c\">t=0: rho_0</text>\n"
      << "<text x=\"" << fmt2(lay.x0 + lay.width) << "\" y=\"50\" text-anchor=\"end\" "
         "font-family=\"sans-serif\" font-size=\"11\" fill=\"#d62728\">t=1: rho_1 "
         "(dashed)</text>\n"
      << "</svg>\n";

  std::ofstream out = open_or_throw(path);
  out << svg.str();
  close_or_throw(out, path);
}

}  // namespace liebridge
