#pragma once

#include <nlohmann/json.hpp>

namespace mcdode {

/// Seven links, three paths, one OD pair; links 1 and 7 are OD connectors
/// and link 2 is the common entry segment. The five road segments share a
/// triangular fundamental diagram.
inline nlohmann::json small7_scenario() {
  return nlohmann::json::parse(R"({
    "grid": {"loading_step": 5, "interval_length": 900, "num_intervals": 10},
    "classes": [
      {"name": "car", "pce": 1.0},
      {"name": "truck", "pce": 2.0}
    ],
    "links": [
      {"id": 1, "from": 0, "to": 1, "length": 0.05, "connector": true},
      {"id": 2, "from": 1, "to": 2, "length": 0.55,
       "free_flow_speed": [35, 25], "capacity": [2200, 1200], "holding": [200, 80]},
      {"id": 3, "from": 2, "to": 4, "length": 0.55,
       "free_flow_speed": [35, 25], "capacity": [2200, 1200], "holding": [200, 80]},
      {"id": 4, "from": 2, "to": 3, "length": 0.55,
       "free_flow_speed": [35, 25], "capacity": [2200, 1200], "holding": [200, 80]},
      {"id": 5, "from": 3, "to": 4, "length": 0.55,
       "free_flow_speed": [35, 25], "capacity": [2200, 1200], "holding": [200, 80]},
      {"id": 6, "from": 3, "to": 4, "length": 0.55,
       "free_flow_speed": [35, 25], "capacity": [2200, 1200], "holding": [200, 80]},
      {"id": 7, "from": 4, "to": 5, "length": 0.05, "connector": true}
    ],
    "od_pairs": [{"origin": 0, "destination": 5}],
    "paths": [
      {"od": 0, "links": [1, 2, 3, 7]},
      {"od": 0, "links": [1, 2, 4, 5, 7]},
      {"od": 0, "links": [1, 2, 4, 6, 7]}
    ]
  })");
}

/// Two links in series, one path, one interval.
inline nlohmann::json two_link_scenario() {
  return nlohmann::json::parse(R"({
    "grid": {"loading_step": 5, "interval_length": 900, "num_intervals": 1},
    "classes": [
      {"name": "car", "pce": 1.0},
      {"name": "truck", "pce": 2.0}
    ],
    "links": [
      {"id": 1, "from": 0, "to": 1, "length": 0.55,
       "free_flow_speed": [35, 25], "capacity": [2200, 1200], "holding": [200, 80]},
      {"id": 2, "from": 1, "to": 2, "length": 0.55,
       "free_flow_speed": [35, 25], "capacity": [2200, 1200], "holding": [200, 80]}
    ],
    "od_pairs": [{"origin": 0, "destination": 2}],
    "paths": [
      {"od": 0, "links": [1, 2]}
    ]
  })");
}

}  // namespace mcdode
