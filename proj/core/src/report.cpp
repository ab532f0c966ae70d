#include "littriage/report.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "littriage/error.hpp"
#include "littriage/text.hpp"

namespace littriage {

namespace {

constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                    "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

std::string md_cell(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '|') out += "\\";
    out.push_back(c);
  }
  return out;
}

std::string num(double v) { return format_fixed(v, 1); }

std::string metric(const std::optional<double>& v) { return v ? format_fixed(*v, 3) : "-"; }

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("write failed for " + path.string());
}

std::size_t nice_ceiling(std::size_t v) {
  if (v <= 5) return 5;
  std::size_t step = 1;
  while (step * 10 < v) step *= 10;
  return ((v + step - 1) / step) * step;
}

}  // namespace

std::string chart_filename(std::string_view group, std::string_view axis) {
  return slugify(group) + "_" + std::string(axis) + ".svg";
}

std::string render_category_svg(const CategorySeries& series) {
  const double bar_w = 48.0;
  const double gap = 24.0;
  const double left = 60.0;
  const double top = 40.0;
  const double plot_h = 240.0;
  const double width = left + static_cast<double>(series.categories.size()) * (bar_w + gap) + gap;
  const double height = top + plot_h + 110.0;
  const auto max_count = nice_ceiling(
      series.counts.empty() ? 0 : *std::max_element(series.counts.begin(), series.counts.end()));

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) +
                    "\" height=\"" + num(height) + "\" viewBox=\"0 0 " + num(width) + " " +
                    num(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<title>" + xml_escape(series.group) + " by category</title>\n";
  svg += "<text x=\"" + num(width / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
         xml_escape(series.group) + "</text>\n";
  svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top + plot_h) + "\" x2=\"" + num(width - gap / 2) +
         "\" y2=\"" + num(top + plot_h) + "\" stroke=\"#333\"/>\n";
  for (int tick = 0; tick <= 5; ++tick) {
    const double value = static_cast<double>(max_count) * tick / 5.0;
    const double y = top + plot_h - plot_h * tick / 5.0;
    svg += "<text x=\"" + num(left - 6) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" +
           format_fixed(value, 0) + "</text>\n";
  }
  for (std::size_t i = 0; i < series.categories.size(); ++i) {
    const double x = left + gap + static_cast<double>(i) * (bar_w + gap);
    const double h = plot_h * static_cast<double>(series.counts[i]) / static_cast<double>(max_count);
    svg += "<rect x=\"" + num(x) + "\" y=\"" + num(top + plot_h - h) + "\" width=\"" + num(bar_w) +
           "\" height=\"" + num(h) + "\" fill=\"" + kPalette[i % std::size(kPalette)] + "\"/>\n";
    svg += "<text x=\"" + num(x + bar_w / 2) + "\" y=\"" + num(top + plot_h - h - 4) +
           "\" text-anchor=\"middle\">" + std::to_string(series.counts[i]) + "</text>\n";
    svg += "<text transform=\"translate(" + num(x + bar_w / 2) + "," + num(top + plot_h + 12) +
           ") rotate(35)\">" + xml_escape(series.categories[i]) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::string render_year_svg(const YearSeries& series) {
  const double left = 60.0;
  const double top = 40.0;
  const double plot_w = std::max(240.0, 48.0 * static_cast<double>(series.years.size()));
  const double plot_h = 240.0;
  const double legend_w = 200.0;
  const double width = left + plot_w + 30.0 + legend_w;
  const double height = top + plot_h + 50.0;
  std::size_t peak = 0;
  for (const auto& row : series.counts) {
    for (auto c : row) peak = std::max(peak, c);
  }
  const auto max_count = nice_ceiling(peak);
  const auto n_years = series.years.size();
  auto x_of = [&](std::size_t y) {
    return n_years <= 1 ? left + plot_w / 2
                        : left + plot_w * static_cast<double>(y) / static_cast<double>(n_years - 1);
  };
  auto y_of = [&](std::size_t count) {
    return top + plot_h - plot_h * static_cast<double>(count) / static_cast<double>(max_count);
  };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) +
                    "\" height=\"" + num(height) + "\" viewBox=\"0 0 " + num(width) + " " +
                    num(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<title>" + xml_escape(series.group) + " by year</title>\n";
  svg += "<text x=\"" + num(left + plot_w / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
         xml_escape(series.group) + " per year</text>\n";
  svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top + plot_h) + "\" x2=\"" + num(left + plot_w) +
         "\" y2=\"" + num(top + plot_h) + "\" stroke=\"#333\"/>\n";
  for (int tick = 0; tick <= 5; ++tick) {
    const double value = static_cast<double>(max_count) * tick / 5.0;
    const double y = top + plot_h - plot_h * tick / 5.0;
    svg += "<text x=\"" + num(left - 6) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" +
           format_fixed(value, 0) + "</text>\n";
  }
  for (std::size_t y = 0; y < n_years; ++y) {
    svg += "<text x=\"" + num(x_of(y)) + "\" y=\"" + num(top + plot_h + 16) +
           "\" text-anchor=\"middle\">" + std::to_string(series.years[y]) + "</text>\n";
  }
  for (std::size_t c = 0; c < series.categories.size(); ++c) {
    const auto* colour = kPalette[c % std::size(kPalette)];
    std::string points;
    for (std::size_t y = 0; y < n_years; ++y) {
      if (!points.empty()) points.push_back(' ');
      points += num(x_of(y)) + "," + num(y_of(series.counts[y][c]));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"2\" points=\"" +
           points + "\"/>\n";
    const double ly = top + 14.0 * static_cast<double>(c);
    svg += "<rect x=\"" + num(left + plot_w + 30) + "\" y=\"" + num(ly) +
           "\" width=\"10\" height=\"10\" fill=\"" + colour + "\"/>\n";
    svg += "<text x=\"" + num(left + plot_w + 46) + "\" y=\"" + num(ly + 9) + "\">" +
           xml_escape(series.categories[c]) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::string render_report_markdown(const ReportInputs& inputs, std::string_view generated_at) {
  std::string md = "# Literature triage report\n\n";
  md += std::string(kTimestampPrefix) + std::string(generated_at) + "\n\n";

  md += "## Run\n\n";
  md += "- Query: " + (inputs.criteria.query.empty() ? std::string("-") : "`" + inputs.criteria.query + "`") + "\n";
  md += "- Year range: " +
        (inputs.criteria.year_range ? std::to_string(inputs.criteria.year_range->min) + "-" +
                                          std::to_string(inputs.criteria.year_range->max)
                                    : std::string("any")) +
        "\n";
  md += std::string("- Require abstract: ") + (inputs.criteria.require_abstract ? "yes" : "no") + "\n";
  md += "- Max articles: " + std::to_string(inputs.criteria.max_articles) + "\n";
  md += "- Scorer: " + (inputs.scorer.empty() ? std::string("-") : inputs.scorer) + "\n";
  std::string modes;
  for (auto m : inputs.input_modes) {
    if (!modes.empty()) modes += ", ";
    modes += to_string(m);
  }
  md += "- Input modes: " + (modes.empty() ? std::string("-") : modes) + "\n";
  if (inputs.trend_mode) md += "- Trends from input mode: " + std::string(to_string(*inputs.trend_mode)) + "\n";
  md += "\n";

  std::vector<std::string> groups;
  auto note_group = [&](const std::string& g) {
    if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
  };
  for (const auto& s : inputs.categories) note_group(s.group);
  for (const auto& s : inputs.years) note_group(s.group);
  for (const auto& e : inputs.evaluations) note_group(e.group);

  for (const auto& g : groups) {
    md += "## " + g + "\n\n";
    for (const auto& s : inputs.categories) {
      if (s.group != g) continue;
      md += "Decided records: " + std::to_string(s.records) + ", flagged (tied or empty): " +
            std::to_string(s.flagged) + "\n\n";
      md += "| Category | Count |\n|---|---:|\n";
      for (std::size_t i = 0; i < s.categories.size(); ++i) {
        md += "| " + md_cell(s.categories[i]) + " | " + std::to_string(s.counts[i]) + " |\n";
      }
      md += "\n![" + g + " by category](" + chart_filename(g, "category") + ")\n\n";
    }
    for (const auto& s : inputs.years) {
      if (s.group != g) continue;
      md += "### Publications per year\n\n";
      if (!s.years.empty()) {
        md += "Years " + std::to_string(s.years.front()) + "-" + std::to_string(s.years.back()) +
              ": " + std::to_string(s.included) + " records included, " +
              std::to_string(s.excluded) + " outside the range.\n\n";
      }
      md += "![" + g + " by year](" + chart_filename(g, "year") + ")\n\n";
    }
    for (const auto& e : inputs.evaluations) {
      if (e.group != g) continue;
      md += "### Evaluation (" + std::string(to_string(e.input)) + " input, " +
            std::string(to_string(e.mode)) + ")\n\n";
      md += "Records evaluated: " + std::to_string(e.records) + ", without gold: " +
            std::to_string(e.excluded_without_gold) + ", gold ties: " + std::to_string(e.excluded_ties) +
            "\n\n";
      md += "| Scope | Ac | F1 | AUC | Pv | Re | Support |\n|---|---:|---:|---:|---:|---:|---:|\n";
      for (std::size_t l = 0; l < e.per_label.size(); ++l) {
        const auto& m = e.per_label[l];
        md += "| " + md_cell(e.labels.at(l)) + " | " + format_fixed(m.accuracy, 3) + " | " +
              format_fixed(m.f1, 3) + " | " + metric(m.auc) + " | " + format_fixed(m.precision, 3) +
              " | " + format_fixed(m.recall, 3) + " | " + std::to_string(m.support) + " |\n";
      }
      md += "| **" + std::string(e.micro ? "micro" : "weighted") + "** | " +
            format_fixed(e.accuracy, 3) + " | " + format_fixed(e.f1, 3) + " | " + metric(e.auc) +
            " | " + format_fixed(e.precision, 3) + " | " + format_fixed(e.recall, 3) + " | " +
            std::to_string(e.records) + " |\n\n";
    }
  }

  if (!inputs.timings.empty()) {
    md += "## Processing time\n\n" + timing_table(inputs.timings) + "\n";
  }

  md += "## Data files\n\n";
  if (!inputs.categories.empty()) md += "- category_trends.csv\n";
  if (!inputs.years.empty()) md += "- time_trends.csv\n";
  if (!inputs.timings.empty()) md += "- timings.csv\n";
  for (const auto& e : inputs.evaluations) {
    md += "- metrics_" + slugify(e.group) + "_" + std::string(to_string(e.input)) + ".csv\n";
  }
  return md;
}

ReportFiles render_report(const ReportInputs& inputs, const std::filesystem::path& directory,
                          std::string_view generated_at) {
  if (inputs.categories.empty() && inputs.years.empty() && inputs.evaluations.empty()) {
    throw UsageError("nothing to report: no trend series and no evaluation");
  }
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw DataError("cannot create report directory " + directory.string() + ": " + ec.message());

  ReportFiles files;
  for (const auto& s : inputs.categories) {
    auto path = directory / chart_filename(s.group, "category");
    write_file(path, render_category_svg(s));
    files.charts.push_back(std::move(path));
  }
  for (const auto& s : inputs.years) {
    auto path = directory / chart_filename(s.group, "year");
    write_file(path, render_year_svg(s));
    files.charts.push_back(std::move(path));
  }
  if (!inputs.categories.empty()) {
    files.tables.push_back(directory / "category_trends.csv");
    write_file(files.tables.back(), category_csv(inputs.categories));
  }
  if (!inputs.years.empty()) {
    files.tables.push_back(directory / "time_trends.csv");
    write_file(files.tables.back(), time_csv(inputs.years));
  }
  if (!inputs.timings.empty()) {
    files.tables.push_back(directory / "timings.csv");
    write_file(files.tables.back(), timing_csv(inputs.timings));
  }
  for (const auto& e : inputs.evaluations) {
    files.tables.push_back(directory /
                           ("metrics_" + slugify(e.group) + "_" + std::string(to_string(e.input)) + ".csv"));
    write_file(files.tables.back(), eval_report_csv(e));
  }
  files.report = directory / "report.md";
  write_file(files.report, render_report_markdown(inputs, generated_at));
  return files;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace littriage
