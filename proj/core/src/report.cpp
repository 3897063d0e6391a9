#include "kmix/report.hpp"

#include <cstdio>

namespace kmix {

std::string format_double(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

bool ExperimentReport::all_pass() const {
  for (const auto& v : verdicts)
    if (!v.pass) return false;
  return true;
}

json ExperimentReport::to_json() const {
  json j;
  j["module"] = module;
  j["version"] = version;
  j["seed"] = seed;
  j["bootstrap_seed"] = bootstrap_seed;
  j["dt"] = dt;
  j["ensemble_size"] = ensemble_size;
  j["excluded"] = excluded;
  j["config"] = config;
  json rows_j = json::array();
  for (const auto& r : rows) {
    json rj;
    rj["time"] = r.time;
    rj["observable"] = r.observable;
    rj["estimate"] = r.estimate;
    rj["se"] = r.se;
    if (r.exact) {
      rj["exact_value"] = *r.exact;
      rj["exact_source"] = r.exact_source;
    }
    rows_j.push_back(std::move(rj));
  }
  j["rows"] = std::move(rows_j);
  json rates_j = json::array();
  for (const auto& r : rates) {
    rates_j.push_back({{"name", r.name},
                       {"rate", r.rate},
                       {"se_rate", r.se_rate},
                       {"target", r.target},
                       {"target_source", r.target_source}});
  }
  j["rates"] = std::move(rates_j);
  json verdicts_j = json::array();
  for (const auto& v : verdicts) {
    verdicts_j.push_back({{"criterion", v.criterion}, {"pass", v.pass}, {"detail", v.detail}});
  }
  j["verdicts"] = std::move(verdicts_j);
  if (!extra.is_null()) j["extra"] = extra;
  return j;
}

void ExperimentReport::write_csv(std::ostream& os) const {
  os << "time,observable,estimate,se,exact_value,exact_source\n";
  for (const auto& r : rows) {
    os << format_double(r.time) << ',' << r.observable << ','
       << format_double(r.estimate) << ',' << format_double(r.se) << ',';
    if (r.exact) os << format_double(*r.exact);
    os << ',' << r.exact_source << '\n';
  }
}

}  // namespace kmix
