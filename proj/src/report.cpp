#include "evosynth/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "evosynth/error.hpp"

namespace evosynth {

namespace {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, const char* column, std::size_t line) {
  T value{};
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || field.empty())
    throw ParseError("invalid " + std::string(column) + " value '" + std::string(field) + "'", line);
  return value;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

constexpr std::array<const char*, 10> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                                  "#bcbd22", "#17becf"};

using RKey = std::pair<double, double>;

std::map<RKey, const char*> colors_for(std::span<const MetricsRow> rows) {
  std::map<RKey, const char*> colors;
  for (const auto& r : rows) colors.emplace(RKey{r.r_cluster, r.r_synapse}, nullptr);
  std::size_t i = 0;
  for (auto& [key, color] : colors) color = kPalette[i++ % kPalette.size()];
  return colors;
}

std::string r_label(const RKey& r) {
  if (r.first == r.second) return "R=" + format_real(r.first * 100.0) + "%";
  return "Rc=" + format_real(r.first * 100.0) + "% Rs=" + format_real(r.second * 100.0) + "%";
}

// Plot frame with linear axes mapping data ranges onto the inner rectangle.
struct Frame {
  static constexpr double kWidth = 760, kHeight = 460;
  static constexpr double kLeft = 80, kRight = 560, kTop = 40, kBottom = 400;
  double x0, x1, y0, y1;
  double x_step = 0, y_step = 0;

  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kRight - kLeft); }
  double py(double y) const { return kBottom - (y - y0) / (y1 - y0) * (kBottom - kTop); }
};

void widen(double& lo, double& hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
}

// Tick step of 1, 2 or 5 times a power of ten giving about five intervals;
// lo and hi are snapped outward onto it.
double nice_ticks(double& lo, double& hi) {
  widen(lo, hi);
  const double raw = (hi - lo) / 5.0;
  const double base = std::pow(10.0, std::floor(std::log10(raw)));
  double step = 10.0 * base;
  for (double f : {1.0, 2.0, 5.0})
    if (f * base >= raw * (1.0 - 1e-9)) {
      step = f * base;
      break;
    }
  lo = std::floor(lo / step + 1e-9) * step;
  hi = std::ceil(hi / step - 1e-9) * step;
  return step;
}

std::string svg_open(const std::string& title) {
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << Frame::kWidth
     << "\" height=\"" << Frame::kHeight << "\" viewBox=\"0 0 " << Frame::kWidth << ' '
     << Frame::kHeight << "\">\n"
     << "<title>" << xml_escape(title) << "</title>\n"
     << "<rect x=\"0\" y=\"0\" width=\"" << Frame::kWidth << "\" height=\"" << Frame::kHeight
     << "\" fill=\"#ffffff\"/>\n";
  return os.str();
}

std::string svg_axes(const Frame& f, const std::string& x_label, const std::string& y_label) {
  std::ostringstream os;
  os << "<g id=\"axes\" stroke=\"#000000\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<line x1=\"" << fmt2(Frame::kLeft) << "\" y1=\"" << fmt2(Frame::kBottom) << "\" x2=\""
     << fmt2(Frame::kRight) << "\" y2=\"" << fmt2(Frame::kBottom) << "\"/>\n";
  os << "<line x1=\"" << fmt2(Frame::kLeft) << "\" y1=\"" << fmt2(Frame::kTop) << "\" x2=\""
     << fmt2(Frame::kLeft) << "\" y2=\"" << fmt2(Frame::kBottom) << "\"/>\n";
  auto ticks = [](double lo, double hi, double step) {
    std::vector<double> out;
    const int n = static_cast<int>(std::lround((hi - lo) / step));
    for (int i = 0; i <= n; ++i) {
      const double v = lo + step * i;
      out.push_back(std::abs(v) < step * 1e-9 ? 0.0 : v);
    }
    return out;
  };
  for (double xv : ticks(f.x0, f.x1, f.x_step)) {
    const double x = f.px(xv);
    os << "<line x1=\"" << fmt2(x) << "\" y1=\"" << fmt2(Frame::kBottom) << "\" x2=\"" << fmt2(x)
       << "\" y2=\"" << fmt2(Frame::kBottom + 5) << "\"/>\n";
    os << "<text x=\"" << fmt2(x) << "\" y=\"" << fmt2(Frame::kBottom + 18)
       << "\" stroke=\"none\" text-anchor=\"middle\">" << format_real(xv) << "</text>\n";
  }
  for (double yv : ticks(f.y0, f.y1, f.y_step)) {
    const double y = f.py(yv);
    os << "<line x1=\"" << fmt2(Frame::kLeft - 5) << "\" y1=\"" << fmt2(y) << "\" x2=\""
       << fmt2(Frame::kLeft) << "\" y2=\"" << fmt2(y) << "\"/>\n";
    os << "<text x=\"" << fmt2(Frame::kLeft - 8) << "\" y=\"" << fmt2(y + 4)
       << "\" stroke=\"none\" text-anchor=\"end\">" << format_real(yv) << "</text>\n";
  }
  os << "<text x=\"" << fmt2((Frame::kLeft + Frame::kRight) / 2) << "\" y=\""
     << fmt2(Frame::kBottom + 40) << "\" stroke=\"none\" text-anchor=\"middle\">"
     << xml_escape(x_label) << "</text>\n";
  os << "<text x=\"20\" y=\"" << fmt2((Frame::kTop + Frame::kBottom) / 2)
     << "\" stroke=\"none\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
     << fmt2((Frame::kTop + Frame::kBottom) / 2) << ")\">" << xml_escape(y_label) << "</text>\n";
  os << "</g>\n";
  return os.str();
}

std::string diamond(double x, double y, double r, const char* color, const char* cls) {
  std::ostringstream os;
  os << "<polygon class=\"" << cls << "\" points=\"" << fmt2(x) << ',' << fmt2(y - r) << ' '
     << fmt2(x + r) << ',' << fmt2(y) << ' ' << fmt2(x) << ',' << fmt2(y + r) << ' ' << fmt2(x - r)
     << ',' << fmt2(y) << "\" fill=\"" << color << "\" fill-opacity=\"0.8\" stroke=\"" << color
     << "\"/>\n";
  return os.str();
}

std::string circle(double x, double y, double r, const char* color, const char* cls) {
  std::ostringstream os;
  os << "<circle class=\"" << cls << "\" cx=\"" << fmt2(x) << "\" cy=\"" << fmt2(y) << "\" r=\""
     << fmt2(r) << "\" fill=\"" << color << "\" fill-opacity=\"0.8\" stroke=\"" << color << "\"/>\n";
  return os.str();
}

}  // namespace

std::string metrics_header() {
  std::string out;
  for (std::size_t i = 0; i < kMetricsColumns.size(); ++i) {
    if (i) out += ',';
    out += kMetricsColumns[i];
  }
  return out;
}

std::string format_metrics_row(const MetricsRow& r) {
  if (r.experiment_id.find_first_of(",\n\r") != std::string::npos)
    throw ConfigError("experiment_id must not contain commas or newlines");
  std::ostringstream os;
  os << r.experiment_id << ',' << to_string(r.mode) << ',' << format_real(r.r_cluster) << ','
     << format_real(r.r_synapse) << ',' << r.seed << ',' << r.generation << ',' << r.network_id
     << ',' << format_real(r.accuracy) << ',' << r.storage_bytes << ',' << r.alive_synapses << ','
     << format_real(r.train_seconds) << ',' << format_real(r.cumulative_seconds);
  return os.str();
}

void append_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRow> rows) {
  std::error_code ec;
  const bool empty = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot open " + path.string() + " for appending");
  if (empty) out << metrics_header() << '\n';
  for (const auto& r : rows) out << format_metrics_row(r) << '\n';
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<MetricsRow> parse_metrics_csv(std::string_view text) {
  std::vector<MetricsRow> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool seen_header = false;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!seen_header) {
      if (line != metrics_header()) throw ParseError("unexpected CSV header", line_no);
      seen_header = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != kMetricsColumns.size())
      throw ParseError("expected " + std::to_string(kMetricsColumns.size()) + " fields, found " +
                           std::to_string(f.size()),
                       line_no);
    MetricsRow r;
    r.experiment_id = std::string(f[0]);
    if (f[1] == "tagged")
      r.mode = MatingMode::tagged;
    else if (f[1] == "untagged")
      r.mode = MatingMode::untagged;
    else
      throw ParseError("invalid mode '" + std::string(f[1]) + "'", line_no);
    r.r_cluster = parse_number<double>(f[2], "r_cluster", line_no);
    r.r_synapse = parse_number<double>(f[3], "r_synapse", line_no);
    r.seed = parse_number<std::uint64_t>(f[4], "seed", line_no);
    r.generation = parse_number<int>(f[5], "generation", line_no);
    r.network_id = parse_number<int>(f[6], "network_id", line_no);
    r.accuracy = parse_number<double>(f[7], "accuracy", line_no);
    r.storage_bytes = parse_number<std::int64_t>(f[8], "storage_bytes", line_no);
    r.alive_synapses = parse_number<std::int64_t>(f[9], "alive_synapses", line_no);
    r.train_seconds = parse_number<double>(f[10], "train_seconds", line_no);
    r.cumulative_seconds = parse_number<double>(f[11], "cumulative_seconds", line_no);
    rows.push_back(std::move(r));
  }
  if (!seen_header) throw ParseError("missing CSV header", line_no == 0 ? 1 : line_no);
  return rows;
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_metrics_csv(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

std::vector<MetricsRow> read_metrics_csvs(std::span<const std::filesystem::path> paths) {
  std::vector<MetricsRow> rows;
  for (const auto& p : paths) {
    auto more = read_metrics_csv(p);
    rows.insert(rows.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  }
  return rows;
}

std::vector<std::filesystem::path> list_metrics_csvs(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::directory_iterator it(dir, ec);
  if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> out;
  for (const auto& entry : it)
    if (entry.is_regular_file() && entry.path().extension() == ".csv") out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::string render_series_svg(std::span<const MetricsRow> rows, SeriesMetric y, SeriesAxis x) {
  using SeriesKey = std::tuple<int, double, double>;  // mode, Rc, Rs
  struct Best {
    double x = 0.0, y = 0.0;
  };
  // (series, seed, generation) -> generation-best point
  std::map<std::tuple<SeriesKey, std::uint64_t, int>, Best> best;
  for (const auto& r : rows) {
    const SeriesKey key{static_cast<int>(r.mode), r.r_cluster, r.r_synapse};
    const double yv = y == SeriesMetric::accuracy ? r.accuracy : static_cast<double>(r.storage_bytes);
    const double xv = x == SeriesAxis::generation ? r.generation : r.cumulative_seconds;
    auto [it, inserted] = best.try_emplace({key, r.seed, r.generation}, Best{xv, yv});
    if (inserted) continue;
    it->second.x = std::max(it->second.x, xv);
    it->second.y = y == SeriesMetric::accuracy ? std::max(it->second.y, yv) : std::min(it->second.y, yv);
  }
  // Average generation-best points over seeds.
  std::map<SeriesKey, std::map<int, std::pair<Best, int>>> series;
  for (const auto& [k, b] : best) {
    auto& slot = series[std::get<0>(k)][std::get<2>(k)];
    slot.first.x += b.x;
    slot.first.y += b.y;
    slot.second += 1;
  }

  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = y == SeriesMetric::accuracy ? 1.0 : 0.0;
  bool first = true;
  for (auto& [key, pts] : series)
    for (auto& [gen, acc] : pts) {
      acc.first.x /= acc.second;
      acc.first.y /= acc.second;
      x0 = first ? acc.first.x : std::min(x0, acc.first.x);
      x1 = first ? acc.first.x : std::max(x1, acc.first.x);
      if (y == SeriesMetric::storage) y1 = std::max(y1, acc.first.y);
      first = false;
    }
  const double x_step = nice_ticks(x0, x1);
  const double y_step = nice_ticks(y0, y1);
  const Frame frame{x0, x1, y0, y1, x_step, y_step};

  const auto colors = colors_for(rows);
  const std::string y_label = y == SeriesMetric::accuracy ? "accuracy" : "storage (bytes)";
  const std::string x_label = x == SeriesAxis::generation ? "generation" : "cumulative training time (s)";
  std::string svg = svg_open(y_label + " vs " + x_label);
  svg += svg_axes(frame, x_label, y_label);
  svg += "<g id=\"series\" fill=\"none\" stroke-width=\"1.5\">\n";
  for (const auto& [key, pts] : series) {
    const auto mode = static_cast<MatingMode>(std::get<0>(key));
    const char* color = colors.at({std::get<1>(key), std::get<2>(key)});
    const char* dash = mode == MatingMode::untagged ? " stroke-dasharray=\"6,3\"" : "";
    if (pts.size() == 1) {
      const Best& b = pts.begin()->second.first;
      svg += circle(frame.px(b.x), frame.py(b.y), 3.5, color, "series-point");
      continue;
    }
    svg += "<polyline class=\"series\" stroke=\"" + std::string(color) + "\"" + dash + " points=\"";
    bool lead = true;
    for (const auto& [gen, acc] : pts) {
      if (!lead) svg += ' ';
      svg += fmt2(frame.px(acc.first.x)) + "," + fmt2(frame.py(acc.first.y));
      lead = false;
    }
    svg += "\"/>\n";
  }
  svg += "</g>\n<g id=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n";
  double ly = Frame::kTop;
  for (const auto& [key, pts] : series) {
    const auto mode = static_cast<MatingMode>(std::get<0>(key));
    const char* color = colors.at({std::get<1>(key), std::get<2>(key)});
    const char* dash = mode == MatingMode::untagged ? " stroke-dasharray=\"6,3\"" : "";
    svg += "<g class=\"legend-entry\"><line x1=\"575\" y1=\"" + fmt2(ly) + "\" x2=\"600\" y2=\"" +
           fmt2(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"" + dash + "/><text x=\"606\" y=\"" +
           fmt2(ly + 4) + "\">" + xml_escape(to_string(mode) + " " + r_label({std::get<1>(key), std::get<2>(key)})) +
           "</text></g>\n";
    ly += 16;
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

std::string render_series_svg(std::span<const std::filesystem::path> csvs, SeriesMetric y,
                              SeriesAxis x) {
  if (csvs.empty()) throw ConfigError("series plot needs at least one CSV");
  const auto rows = read_metrics_csvs(csvs);
  return render_series_svg(rows, y, x);
}

std::optional<std::size_t> top_left_index(std::span<const MetricsRow> rows) {
  if (rows.empty()) return std::nullopt;
  std::int64_t max_storage = 0;
  for (const auto& r : rows) max_storage = std::max(max_storage, r.storage_bytes);
  std::size_t best = 0;
  double best_score = -INFINITY;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double norm = max_storage > 0 ? static_cast<double>(rows[i].storage_bytes) /
                                              static_cast<double>(max_storage)
                                        : 0.0;
    const double score = rows[i].accuracy - norm;
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

std::string render_scatter_svg(std::span<const MetricsRow> all_rows, const ScatterOptions& options) {
  std::vector<MetricsRow> rows;
  for (const auto& r : all_rows)
    if (!options.mode || r.mode == *options.mode) rows.push_back(r);

  double x1 = 0.0;
  for (const auto& r : rows) x1 = std::max(x1, static_cast<double>(r.storage_bytes));
  double x0 = 0.0, y0 = 0.0, y1 = 1.0;
  const double x_step = nice_ticks(x0, x1);
  const double y_step = nice_ticks(y0, y1);
  const Frame frame{x0, x1, y0, y1, x_step, y_step};

  const auto colors = colors_for(rows);
  std::string svg = svg_open("accuracy vs storage");
  svg += svg_axes(frame, "storage (bytes)", "accuracy");
  svg += "<g id=\"points\">\n";
  for (const auto& r : rows) {
    const char* color = colors.at({r.r_cluster, r.r_synapse});
    const double px = frame.px(static_cast<double>(r.storage_bytes)), py = frame.py(r.accuracy);
    svg += r.mode == MatingMode::tagged ? diamond(px, py, 4.0, color, "glyph-diamond")
                                        : circle(px, py, 3.5, color, "glyph-circle");
  }
  svg += "</g>\n";
  if (const auto best = top_left_index(rows)) {
    const MetricsRow& b = rows[*best];
    svg += "<circle id=\"best-point\" cx=\"" + fmt2(frame.px(static_cast<double>(b.storage_bytes))) +
           "\" cy=\"" + fmt2(frame.py(b.accuracy)) +
           "\" r=\"8.00\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1.5\"><title>" +
           xml_escape(to_string(b.mode) + " seed " + std::to_string(b.seed) + " generation " +
                      std::to_string(b.generation) + " network " + std::to_string(b.network_id) +
                      " accuracy " + format_real(b.accuracy) + " storage " +
                      std::to_string(b.storage_bytes)) +
           "</title></circle>\n";
  }
  svg += "<g id=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += diamond(587, Frame::kTop, 4.0, "#000000", "legend-glyph");
  svg += "<text x=\"600\" y=\"" + fmt2(Frame::kTop + 4) + "\">gene tagging</text>\n";
  svg += circle(587, Frame::kTop + 16, 3.5, "#000000", "legend-glyph");
  svg += "<text x=\"600\" y=\"" + fmt2(Frame::kTop + 20) + "\">no gene tagging</text>\n";
  double ly = Frame::kTop + 40;
  for (const auto& [key, color] : colors) {
    svg += "<g class=\"legend-entry\"><rect x=\"582\" y=\"" + fmt2(ly - 5) +
           "\" width=\"10\" height=\"10\" fill=\"" + color + "\"/><text x=\"600\" y=\"" +
           fmt2(ly + 4) + "\">" + xml_escape(r_label(key)) + "</text></g>\n";
    ly += 16;
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

std::string render_scatter_svg(std::span<const std::filesystem::path> csvs,
                               const ScatterOptions& options) {
  if (csvs.empty()) throw ConfigError("scatter plot needs at least one CSV");
  const auto rows = read_metrics_csvs(csvs);
  return render_scatter_svg(rows, options);
}

}  // namespace evosynth
