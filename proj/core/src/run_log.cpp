#include "adversim/run_log.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace adversim {

using nlohmann::json;

bool LogEntry::operator==(const LogEntry& o) const {
  return t == o.t && snapshot.sv == o.snapshot.sv && snapshot.povs == o.snapshot.povs &&
         snapshot.t == o.snapshot.t && controls == o.controls && modes == o.modes &&
         t_star == o.t_star;
}

json entry_to_json(const LogEntry& e, const std::vector<std::string>& ids) {
  json j = json::object();
  j["t"] = e.t;
  json veh = json::array();
  const std::size_t n = 1 + e.snapshot.povs.size();
  for (std::size_t i = 0; i < n; ++i) {
    const VehicleState& s = i == 0 ? e.snapshot.sv : e.snapshot.povs[i - 1];
    json v = json::object();
    v["id"] = i < ids.size() ? ids[i] : (i == 0 ? "sv" : "pov" + std::to_string(i));
    v["role"] = i == 0 ? "sv" : "pov";
    v["x"] = s.x;
    v["y"] = s.y;
    v["v"] = s.v;
    v["phi"] = s.phi;
    if (i < e.controls.size() && e.controls[i]) {
      v["u"] = json::array({e.controls[i]->a, e.controls[i]->steer});
    } else {
      v["u"] = nullptr;
    }
    veh.push_back(v);
  }
  j["vehicles"] = veh;
  j["mode"] = e.modes;
  json ts = json::array();
  for (const auto& t : e.t_star) ts.push_back(t ? json(*t) : json(nullptr));
  j["t_star"] = ts;
  return j;
}

std::string RunLog::to_jsonl() const {
  std::string out;
  for (const auto& e : entries) {
    out += entry_to_json(e, ids).dump();
    out += '\n';
  }
  if (termination) {
    json t = json::object();
    t["reason"] = termination->name();
    t["pov"] = termination->pov && *termination->pov + 1 < ids.size()
                   ? json(ids[*termination->pov + 1])
                   : json(nullptr);
    t["t"] = termination->t;
    t["config_digest"] = config_digest;
    out += json{{"termination", t}}.dump();
    out += '\n';
  }
  return out;
}

namespace {

std::string num(double v) { return json(v).dump(); }

double number_at(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw Error(std::string("log entry missing number '") + key + "'");
  }
  return j.at(key).get<double>();
}

TerminationReason termination_from_json(const json& t, const std::vector<std::string>& ids) {
  const std::string reason = t.at("reason").get<std::string>();
  const double time = t.at("t").get<double>();
  std::optional<std::size_t> pov;
  if (t.contains("pov") && t.at("pov").is_string()) {
    const std::string id = t.at("pov").get<std::string>();
    for (std::size_t i = 1; i < ids.size(); ++i) {
      if (ids[i] == id) pov = i - 1;
    }
    if (!pov) throw Error("termination names unknown POV '" + id + "'");
  }
  if (reason == "collision") return TerminationReason::collision(pov.value_or(0), time);
  if (reason == "timeout") return TerminationReason::timeout(time);
  if (reason == "capture_only") return TerminationReason::capture_only(pov.value_or(0), time);
  if (reason == "external_stop") return TerminationReason::external_stop(time);
  throw Error("unknown termination reason '" + reason + "'");
}

}  // namespace

std::string RunLog::to_csv() const {
  std::string out = "id,t,x,y,v,phi,a,steer\n";
  for (const auto& e : entries) {
    const std::size_t n = 1 + e.snapshot.povs.size();
    for (std::size_t i = 0; i < n; ++i) {
      const VehicleState& s = i == 0 ? e.snapshot.sv : e.snapshot.povs[i - 1];
      out += (i < ids.size() ? ids[i] : std::to_string(i)) + "," + num(e.t) + "," + num(s.x) +
             "," + num(s.y) + "," + num(s.v) + "," + num(s.phi) + ",";
      if (i < e.controls.size() && e.controls[i]) {
        out += num(e.controls[i]->a) + "," + num(e.controls[i]->steer);
      } else {
        out += ",";
      }
      out += '\n';
    }
  }
  return out;
}

RunLog RunLog::from_jsonl(const std::string& text) {
  RunLog log;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error("line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      if (j.contains("termination")) {
        const json& t = j.at("termination");
        log.termination = termination_from_json(t, log.ids);
        if (t.contains("config_digest") && t.at("config_digest").is_string()) {
          log.config_digest = t.at("config_digest").get<std::string>();
        }
        continue;
      }
      LogEntry e;
      e.t = number_at(j, "t");
      const json& veh = j.at("vehicles");
      if (!veh.is_array() || veh.empty()) throw Error("entry without vehicles");
      std::vector<std::string> ids;
      for (std::size_t i = 0; i < veh.size(); ++i) {
        const json& v = veh[i];
        const bool sv = v.at("role").get<std::string>() == "sv";
        if (sv != (i == 0)) throw Error("the SV must be the first vehicle");
        ids.push_back(v.at("id").get<std::string>());
        VehicleState s(number_at(v, "x"), number_at(v, "y"), number_at(v, "v"),
                       number_at(v, "phi"));
        if (i == 0) {
          e.snapshot.sv = s;
        } else {
          e.snapshot.povs.push_back(s);
        }
        const json& u = v.at("u");
        if (u.is_null()) {
          e.controls.emplace_back(std::nullopt);
        } else {
          e.controls.emplace_back(AnchorControl{u.at(0).get<double>(), u.at(1).get<double>()});
        }
      }
      if (log.ids.empty()) log.ids = ids;
      e.snapshot.t = e.t;
      for (const auto& m : j.at("mode")) e.modes.push_back(m.get<std::string>());
      for (const auto& t : j.at("t_star")) {
        e.t_star.push_back(t.is_null() ? std::nullopt : std::optional<double>(t.get<double>()));
      }
      log.entries.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw Error("line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return log;
}

json RunSummary::to_json() const {
  json j = json::object();
  j["termination"] = termination;
  j["termination_pov"] = termination_pov ? json(*termination_pov) : json(nullptr);
  j["termination_t"] = termination_t;
  j["collision_time"] = collision_time ? json(*collision_time) : json(nullptr);
  j["min_distance"] = min_distance;
  j["min_distance_t"] = min_distance_t;
  json tr = json::object();
  for (std::size_t i = 0; i < pov_ids.size() && i < mode_transitions.size(); ++i) {
    tr[pov_ids[i]] = mode_transitions[i];
  }
  j["mode_transitions"] = tr;
  json series = json::array();
  for (const auto& s : t_star_series) {
    series.push_back({{"t", s.t}, {"pov", pov_ids.at(s.pov)}, {"t_star", s.t_star}});
  }
  j["t_star_series"] = series;
  j["first_engagement"] = first_engagement ? json(*first_engagement) : json(nullptr);
  json caps = json::array();
  for (const auto& c : capture_events) caps.push_back({{"pov", pov_ids.at(c.pov)}, {"t", c.t}});
  j["capture_events"] = caps;
  j["min_pov_pov_distance"] = min_pov_pov_distance ? json(*min_pov_pov_distance) : json(nullptr);
  return j;
}

RunSummary summarize(const RunLog& log, const std::vector<VehicleDims>& dims, double c) {
  RunSummary s;
  s.pov_ids.assign(log.ids.begin() + (log.ids.empty() ? 0 : 1), log.ids.end());
  if (log.termination) {
    s.termination = log.termination->name();
    s.termination_t = log.termination->t;
    if (log.termination->pov && *log.termination->pov < s.pov_ids.size()) {
      s.termination_pov = s.pov_ids[*log.termination->pov];
    }
    if (log.termination->kind == TerminationReason::Kind::Collision) {
      s.collision_time = log.termination->t;
    }
  }
  const std::size_t k = s.pov_ids.size();
  s.mode_transitions.assign(k, 0);
  s.min_distance = std::numeric_limits<double>::infinity();
  std::vector<bool> captured(k, false);
  auto dim = [&](std::size_t i) { return i < dims.size() ? dims[i] : VehicleDims{}; };

  for (std::size_t e = 0; e < log.entries.size(); ++e) {
    const LogEntry& entry = log.entries[e];
    const Snapshot& snap = entry.snapshot;
    if (!snap.povs.empty()) {
      const PovDistance d = min_pov_distance(snap);
      if (d.distance < s.min_distance) {
        s.min_distance = d.distance;
        s.min_distance_t = entry.t;
      }
    }
    for (std::size_t j = 0; j < snap.povs.size() && j < k; ++j) {
      const double dist = std::hypot(snap.povs[j].x - snap.sv.x, snap.povs[j].y - snap.sv.y);
      const bool cap = dist < c;
      if (cap && !captured[j]) s.capture_events.push_back({j, entry.t});
      captured[j] = cap;
      for (std::size_t i = j + 1; i < snap.povs.size(); ++i) {
        const double pd = rect_distance(snap.povs[j], dim(j + 1), snap.povs[i], dim(i + 1));
        if (!s.min_pov_pov_distance || pd < *s.min_pov_pov_distance) s.min_pov_pov_distance = pd;
      }
    }
    for (std::size_t j = 0; j < entry.modes.size() && j < k; ++j) {
      if (e > 0 && j < log.entries[e - 1].modes.size() &&
          log.entries[e - 1].modes[j] != entry.modes[j]) {
        ++s.mode_transitions[j];
      }
      if (!s.first_engagement && entry.modes[j] == "worst_case") s.first_engagement = entry.t;
    }
    for (std::size_t j = 0; j < entry.t_star.size() && j < k; ++j) {
      if (entry.t_star[j]) s.t_star_series.push_back({entry.t, j, *entry.t_star[j]});
    }
  }
  if (!std::isfinite(s.min_distance)) s.min_distance = 0.0;
  return s;
}

json BatchSummary::to_json() const {
  json j = json::object();
  j["runs"] = runs;
  j["failures"] = failures;
  j["collisions"] = collisions;
  j["collision_rate"] = collision_rate;
  j["mean_min_distance"] = mean_min_distance;
  j["mean_first_engagement"] = mean_first_engagement ? json(*mean_first_engagement) : json(nullptr);
  json items_j = json::array();
  for (const auto& r : items) {
    json i = json::object();
    i["scenario"] = r.scenario;
    i["seed"] = r.seed;
    if (r.summary) {
      i["termination"] = r.summary->termination;
      i["collision_time"] = r.summary->collision_time ? json(*r.summary->collision_time) : json(nullptr);
      i["min_distance"] = r.summary->min_distance;
      i["first_engagement"] =
          r.summary->first_engagement ? json(*r.summary->first_engagement) : json(nullptr);
    } else {
      i["error"] = r.error;
    }
    items_j.push_back(i);
  }
  j["items"] = items_j;
  return j;
}

BatchSummary aggregate(std::vector<BatchRun> runs) {
  BatchSummary b;
  double dist_sum = 0.0;
  double eng_sum = 0.0;
  int eng_n = 0;
  int ok = 0;
  for (const auto& r : runs) {
    ++b.runs;
    if (!r.summary) {
      ++b.failures;
      continue;
    }
    ++ok;
    if (r.summary->collision_time) ++b.collisions;
    dist_sum += r.summary->min_distance;
    if (r.summary->first_engagement) {
      eng_sum += *r.summary->first_engagement;
      ++eng_n;
    }
  }
  if (ok > 0) {
    b.collision_rate = static_cast<double>(b.collisions) / ok;
    b.mean_min_distance = dist_sum / ok;
  }
  if (eng_n > 0) b.mean_first_engagement = eng_sum / eng_n;
  b.items = std::move(runs);
  return b;
}

}  // namespace adversim
