#include "gami/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "gami/error.hpp"

namespace gami {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string safe(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                    c == '-' || c == '.';
    if (!ok) c = '_';
  }
  return out;
}

// Quotes a CSV field when needed.
std::string field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, ReportFiles& files) : out_(path, std::ios::binary) {
    if (!out_) throw DataError("cannot write " + path.string());
    files.written.push_back(path);
  }
  std::ofstream& stream() { return out_; }

 private:
  std::ofstream out_;
};

}  // namespace

std::vector<double> linear_grid(double lo, double hi, std::size_t count) {
  std::vector<double> g(count);
  if (count == 1) {
    g[0] = lo;
    return g;
  }
  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(count - 1);
    g[i] = i + 1 == count ? hi : lo + t * (hi - lo);
  }
  return g;
}

ReportFiles write_report(const GamiModel& model, const Dataset& data, std::span<const std::size_t> rows,
                         const std::filesystem::path& directory, const ReportOptions& options) {
  if (!model.effects) throw UsageError("report needs a purified model");
  if (rows.empty()) throw UsageError("report needs training rows");
  if (data.features() != model.features()) throw DataError("feature count does not match the model");
  std::filesystem::create_directories(directory);
  const EffectStore& store = *model.effects;
  const auto& names = model.feature_names;
  ReportFiles files;

  std::vector<std::vector<double>> sorted(data.features());
  auto column = [&](std::size_t f) -> const std::vector<double>& {
    if (sorted[f].empty()) {
      for (auto r : rows) sorted[f].push_back(data.at(r, f));
      std::sort(sorted[f].begin(), sorted[f].end());
    }
    return sorted[f];
  };

  {
    CsvFile csv(directory / "importance.csv", files);
    csv.stream() << "rank,term,kind,importance\n";
    const auto ranked = term_importance(model, data, rows);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      csv.stream() << i + 1 << ',' << field(term_label(ranked[i].term, names)) << ','
                   << (ranked[i].term.is_main() ? "main" : "interaction") << ',' << fmt(ranked[i].importance)
                   << '\n';
    }
  }

  for (const auto& m : store.mains) {
    const auto& x = column(m.feature);
    CsvFile csv(directory / ("main_" + safe(names[m.feature]) + ".csv"), files);
    csv.stream() << field(names[m.feature]) << ",effect\n";
    for (double v : linear_grid(x.front(), x.back(), options.main_grid)) {
      csv.stream() << fmt(v) << ',' << fmt(store.main_value(m, model.trees, v)) << '\n';
    }
  }

  for (const auto& e : store.interactions) {
    const auto& xa = column(e.first);
    const auto& xb = column(e.second);
    const std::string stem = safe(names[e.first]) + "_" + safe(names[e.second]);
    const auto ga = linear_grid(xa.front(), xa.back(), options.interaction_grid);
    const auto gb = linear_grid(xb.front(), xb.back(), options.interaction_grid);
    {
      CsvFile csv(directory / ("interaction_" + stem + ".csv"), files);
      csv.stream() << field(names[e.first]) << ',' << field(names[e.second]) << ",effect\n";
      for (double a : ga) {
        for (double b : gb) {
          csv.stream() << fmt(a) << ',' << fmt(b) << ',' << fmt(store.interaction_value(e, model.trees, a, b))
                       << '\n';
        }
      }
    }
    CsvFile csv(directory / ("slices_" + stem + ".csv"), files);
    csv.stream() << "fixed,level,fixed_value,varying,value,effect\n";
    auto slices = [&](std::size_t fixed, std::size_t varying, const std::vector<double>& fixed_sorted,
                      const std::vector<double>& varying_sorted, bool fixed_is_second) {
      for (double level : options.slice_levels) {
        const double at = sorted_quantile(fixed_sorted, level);
        for (double v : linear_grid(varying_sorted.front(), varying_sorted.back(), options.main_grid)) {
          const double g = fixed_is_second ? store.interaction_value(e, model.trees, v, at)
                                           : store.interaction_value(e, model.trees, at, v);
          csv.stream() << field(names[fixed]) << ',' << fmt(level) << ',' << fmt(at) << ','
                       << field(names[varying]) << ',' << fmt(v) << ',' << fmt(g) << '\n';
        }
      }
    };
    slices(e.second, e.first, xb, xa, true);
    slices(e.first, e.second, xa, xb, false);
  }

  CsvFile csv(directory / "contributions.csv", files);
  csv.stream() << "row,intercept";
  for (const auto& m : store.mains) csv.stream() << ',' << field(names[m.feature]);
  for (const auto& e : store.interactions) {
    csv.stream() << ',' << field(term_label(TermId::pair(e.first, e.second), names));
  }
  csv.stream() << ",prediction\n";
  for (auto r : rows) {
    csv.stream() << r << ',' << fmt(store.intercept);
    for (const auto& m : store.mains) csv.stream() << ',' << fmt(store.main_value(m, model.trees, data.at(r, m.feature)));
    for (const auto& e : store.interactions) {
      csv.stream() << ',' << fmt(store.interaction_value(e, model.trees, data.at(r, e.first), data.at(r, e.second)));
    }
    csv.stream() << ',' << fmt(model.predict_row(data, r)) << '\n';
  }
  return files;
}

}  // namespace gami
