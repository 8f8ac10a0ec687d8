#include "trustfield/fields.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "trustfield/csv.hpp"
#include "trustfield/errors.hpp"

namespace trustfield::fields {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t edge_bin(double value, double width, double extent, std::size_t bins,
                     const char* what) {
    const double tol = 1e-9 * std::max(1.0, extent);
    if (!(value >= -tol && value <= extent + tol)) {
        throw DataError(std::string("field binning: ") + what + " " +
                        csv::format_double(value) + " outside [0, " +
                        csv::format_double(extent) + "]");
    }
    const auto raw = static_cast<std::ptrdiff_t>(std::floor(value / width));
    if (raw < 0) return 0;
    const auto ix = static_cast<std::size_t>(raw);
    return ix >= bins ? bins - 1 : ix;
}

// Mean that returns the common value exactly when every sample agrees.
struct BinMean {
    double sum = 0.0;
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();
    std::size_t count = 0;

    void add(double v) {
        sum += v;
        min = std::min(min, v);
        max = std::max(max, v);
        ++count;
    }

    double value() const {
        if (count == 0) return kNaN;
        if (min == max) return min;
        return sum / static_cast<double>(count);
    }
};

double parse_field_value(std::string_view text, const std::filesystem::path& path,
                         std::size_t line_no) {
    const auto value = csv::parse_double(text);
    if (!value) {
        throw DataError("bad numeric value '" + std::string(text) + "' in " + path.string() +
                        " line " + std::to_string(line_no));
    }
    return *value;
}

void require_sample_period(const trajdata::TrajectoryDataset& dataset) {
    if (!(dataset.sample_period_s > 0.0)) {
        throw DataError("field computation requires a known uniform sample period; "
                        "resample the dataset first");
    }
}

}  // namespace

GridSpec GridSpec::create(double dx_ft, double dt_s, double corridor_length_ft,
                          double duration_s) {
    if (!(dx_ft > 0.0) || !(dt_s > 0.0)) {
        throw ConfigError("grid: bin sizes must be positive");
    }
    if (!(corridor_length_ft > 0.0) || !(duration_s > 0.0)) {
        throw ConfigError("grid: corridor length and duration must be positive");
    }
    GridSpec grid;
    grid.dx_ft = dx_ft;
    grid.dt_s = dt_s;
    grid.corridor_length_ft = corridor_length_ft;
    grid.duration_s = duration_s;
    grid.n_x = static_cast<std::size_t>(
        std::max(1.0, std::ceil(corridor_length_ft / dx_ft - 1e-9)));
    grid.n_t = static_cast<std::size_t>(std::max(1.0, std::ceil(duration_s / dt_s - 1e-9)));
    return grid;
}

std::size_t GridSpec::position_bin(double position_ft) const {
    return edge_bin(position_ft, dx_ft, corridor_length_ft, n_x, "position");
}

std::size_t GridSpec::time_bin(double time_s) const {
    return edge_bin(time_s, dt_s, duration_s, n_t, "time");
}

Field make_field(const GridSpec& grid, std::string quantity, double fill) {
    Field field;
    field.grid = grid;
    field.quantity = std::move(quantity);
    field.values.assign(grid.n_x * grid.n_t, fill);
    return field;
}

Field compute_density_field(const trajdata::TrajectoryDataset& dataset, const GridSpec& grid) {
    require_sample_period(dataset);
    Field time = make_field(grid, "density", 0.0);
    const double period = dataset.sample_period_s;
    for (const auto& [id, trace] : dataset.traces) {
        for (const auto& sample : trace.samples) {
            time.at(grid.position_bin(sample.position_ft), grid.time_bin(sample.time_s)) +=
                period;
        }
    }
    Field out = make_field(grid, "density", kNaN);
    const double area = grid.dx_ft * grid.dt_s;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (time.values[i] > 0.0) out.values[i] = time.values[i] / area;
    }
    return out;
}

Field compute_speed_field(const trajdata::TrajectoryDataset& dataset, const GridSpec& grid) {
    require_sample_period(dataset);
    Field dist = make_field(grid, "speed", 0.0);
    Field time = make_field(grid, "speed", 0.0);
    const double period = dataset.sample_period_s;
    for (const auto& [id, trace] : dataset.traces) {
        for (const auto& sample : trace.samples) {
            const std::size_t ix = grid.position_bin(sample.position_ft);
            const std::size_t it = grid.time_bin(sample.time_s);
            dist.at(ix, it) += sample.speed_ftps * period;
            time.at(ix, it) += period;
        }
    }
    Field out = make_field(grid, "speed", kNaN);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (time.values[i] > 0.0) out.values[i] = dist.values[i] / time.values[i];
    }
    return out;
}

Field compute_flow_field(const Field& density, const Field& speed) {
    if (density.quantity != "density" || speed.quantity != "speed") {
        throw DataError("flow field: inputs must be a density and a speed field, got '" +
                        density.quantity + "' and '" + speed.quantity + "'");
    }
    const GridSpec& a = density.grid;
    const GridSpec& b = speed.grid;
    if (a.n_x != b.n_x || a.n_t != b.n_t || a.dx_ft != b.dx_ft || a.dt_s != b.dt_s ||
        a.corridor_length_ft != b.corridor_length_ft || a.duration_s != b.duration_s) {
        throw DataError("flow field: density and speed grids differ");
    }
    Field out = make_field(a, "flow", kNaN);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const double d = density.values[i];
        const double s = speed.values[i];
        if (!std::isnan(d) && !std::isnan(s)) out.values[i] = d * s;
    }
    return out;
}

Field compute_trust_field(const std::vector<TrustTracePoint>& points, const GridSpec& grid,
                          TrustAveraging averaging) {
    Field out = make_field(grid, "trust", kNaN);
    if (averaging == TrustAveraging::per_sample) {
        std::vector<BinMean> acc(grid.n_x * grid.n_t);
        for (const auto& p : points) {
            acc[grid.position_bin(p.position_ft) * grid.n_t + grid.time_bin(p.time_s)].add(
                p.theta);
        }
        for (std::size_t i = 0; i < acc.size(); ++i) out.values[i] = acc[i].value();
        return out;
    }
    // Per-vehicle: average each vehicle's points in the bin first, then
    // average the vehicle means (ascending id order).
    std::vector<std::map<int, BinMean>> acc(grid.n_x * grid.n_t);
    for (const auto& p : points) {
        acc[grid.position_bin(p.position_ft) * grid.n_t + grid.time_bin(p.time_s)][p.vehicle_id]
            .add(p.theta);
    }
    for (std::size_t i = 0; i < acc.size(); ++i) {
        BinMean outer;
        for (const auto& [id, inner] : acc[i]) outer.add(inner.value());
        out.values[i] = outer.value();
    }
    return out;
}

Field sample_count_field(const trajdata::TrajectoryDataset& dataset, const GridSpec& grid) {
    Field out = make_field(grid, "sample_count", 0.0);
    for (const auto& [id, trace] : dataset.traces) {
        for (const auto& sample : trace.samples) {
            out.at(grid.position_bin(sample.position_ft), grid.time_bin(sample.time_s)) += 1.0;
        }
    }
    return out;
}

void export_field_csv(const Field& field, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open file for writing: " + path.string());
    out << "# quantity: " << field.quantity << "\n";
    out << "# dx_ft: " << csv::format_double(field.grid.dx_ft) << "\n";
    out << "# dt_s: " << csv::format_double(field.grid.dt_s) << "\n";
    out << "# corridor_length_ft: " << csv::format_double(field.grid.corridor_length_ft)
        << "\n";
    out << "# duration_s: " << csv::format_double(field.grid.duration_s) << "\n";
    out << "# rows: position bin 0 first (bottom of the rendered heatmap); "
           "columns: time bin 0 first\n";
    for (std::size_t ix = 0; ix < field.grid.n_x; ++ix) {
        for (std::size_t it = 0; it < field.grid.n_t; ++it) {
            if (it > 0) out << ',';
            out << csv::format_double(field.at(ix, it));
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path.string());
}

Field import_field_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());
    double dx = 0.0, dt = 0.0, length = 0.0, duration = 0.0;
    std::string quantity;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto colon = line.find(':');
            if (colon == std::string::npos) continue;
            const std::string key = line.substr(1, colon - 1);
            const std::string value = line.substr(colon + 1);
            const auto trim = [](const std::string& s) {
                const auto b = s.find_first_not_of(" \t");
                const auto e = s.find_last_not_of(" \t");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            const std::string k = trim(key);
            if (k == "quantity") quantity = trim(value);
            else if (k == "dx_ft") dx = parse_field_value(trim(value), path, line_no);
            else if (k == "dt_s") dt = parse_field_value(trim(value), path, line_no);
            else if (k == "corridor_length_ft")
                length = parse_field_value(trim(value), path, line_no);
            else if (k == "duration_s")
                duration = parse_field_value(trim(value), path, line_no);
            continue;
        }
        std::vector<double> row;
        std::size_t start = 0;
        while (start <= line.size()) {
            auto end = line.find(',', start);
            if (end == std::string::npos) end = line.size();
            row.push_back(
                parse_field_value(std::string_view(line).substr(start, end - start), path,
                                  line_no));
            start = end + 1;
        }
        rows.push_back(std::move(row));
    }
    if (dx <= 0.0 || dt <= 0.0 || length <= 0.0 || duration <= 0.0) {
        throw DataError("field file missing grid header: " + path.string());
    }
    const GridSpec grid = GridSpec::create(dx, dt, length, duration);
    if (rows.size() != grid.n_x) {
        throw DataError("field file row count does not match grid: " + path.string());
    }
    Field field = make_field(grid, quantity, kNaN);
    for (std::size_t ix = 0; ix < grid.n_x; ++ix) {
        if (rows[ix].size() != grid.n_t) {
            throw DataError("field file column count does not match grid: " + path.string());
        }
        for (std::size_t it = 0; it < grid.n_t; ++it) field.at(ix, it) = rows[ix][it];
    }
    return field;
}

void export_heatmap(const Field& field, const std::filesystem::path& path) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const double v : field.values) {
        if (std::isnan(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(lo <= hi)) throw DataError("heatmap: field has no present cells");

    std::ofstream out(path);
    if (!out) throw DataError("cannot open file for writing: " + path.string());
    out << "P2\n" << field.grid.n_t << ' ' << field.grid.n_x << "\n255\n";
    std::string line;
    const auto flush = [&] {
        if (!line.empty()) {
            out << line << '\n';
            line.clear();
        }
    };
    for (std::size_t row = field.grid.n_x; row-- > 0;) {
        for (std::size_t it = 0; it < field.grid.n_t; ++it) {
            const double v = field.at(row, it);
            int pixel = 0;
            if (!std::isnan(v)) {
                pixel = lo == hi ? 128
                                 : static_cast<int>(std::lround((v - lo) / (hi - lo) * 255.0));
            }
            const std::string tok = std::to_string(pixel);
            if (line.size() + tok.size() + 1 > 70) flush();
            if (!line.empty()) line += ' ';
            line += tok;
        }
        flush();
    }
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace trustfield::fields
