#include "dmimo/result_table.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace dmimo {

void ResultTable::add(std::string experiment, uint64_t trial, std::string sweep,
                      std::string metric, double value) {
  rows.push_back(
      {std::move(experiment), trial, std::move(sweep), std::move(metric), value});
}

void ResultTable::append(const ResultTable& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

void ResultTable::sort() {
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.trial != b.trial) return a.trial < b.trial;
    if (a.sweep != b.sweep) return a.sweep < b.sweep;
    return a.metric < b.metric;
  });
}

std::string artifact_header(const ExperimentConfig& config) {
  std::ostringstream os;
  os << "# artifact_version=" << kArtifactVersion << '\n'
     << "# config_hash=" << config_hash(config) << '\n'
     << "# seed=" << config.seed << '\n';
  return os.str();
}

std::string table_to_csv(const ResultTable& table,
                         const ExperimentConfig& config) {
  std::ostringstream os;
  os.precision(17);
  os << artifact_header(config);
  os << "experiment,trial,sweep,metric,value\n";
  for (const auto& r : table.rows)
    os << r.experiment << ',' << r.trial << ',' << r.sweep << ',' << r.metric
       << ',' << r.value << '\n';
  return os.str();
}

std::string table_summary_csv(const ResultTable& table,
                              const ExperimentConfig& config) {
  struct Acc {
    double sum = 0.0, lo = 0.0, hi = 0.0;
    long n = 0;
  };
  std::map<std::pair<std::string, std::string>, Acc> by_key;
  for (const auto& r : table.rows) {
    Acc& a = by_key[{r.sweep, r.metric}];
    if (a.n == 0) {
      a.lo = a.hi = r.value;
    } else {
      a.lo = std::min(a.lo, r.value);
      a.hi = std::max(a.hi, r.value);
    }
    a.sum += r.value;
    a.n += 1;
  }
  std::ostringstream os;
  os.precision(17);
  os << artifact_header(config);
  os << "sweep,metric,mean,min,max,n\n";
  for (const auto& [key, a] : by_key)
    os << key.first << ',' << key.second << ',' << a.sum / a.n << ',' << a.lo
       << ',' << a.hi << ',' << a.n << '\n';
  return os.str();
}

}  // namespace dmimo
