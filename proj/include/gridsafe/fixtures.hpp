#pragma once

// Bundled desk-scale fixtures: a two-bus analytic case, a stressed five-bus
// case with a daily-cycle chronics generator, and a fourteen-bus case
// (standard IEEE 14-bus impedances, transformer taps dropped).

#include <cmath>
#include <cstddef>
#include <random>
#include <string>

#include "gridsafe/env/chronics.hpp"
#include "gridsafe/grid/case.hpp"

namespace gridsafe::fixtures {

inline const char* two_bus_case() {
  return R"({
  "name": "two-bus",
  "base_mva": 100,
  "buses": [{"id": "1", "v_min": 0.9, "v_max": 1.1}, {"id": "2", "v_min": 0.9, "v_max": 1.1}],
  "substations": [{"id": "0", "bus": "1"}, {"id": "1", "bus": "2"}],
  "lines": [{"id": "0", "from": "0", "to": "1", "r": 0.0, "x": 0.1, "b": 0.0, "i_max": 10.0}],
  "generators": [{"id": "0", "substation": "0", "p_max": 1000, "v_set": 1.0}],
  "loads": [{"id": "0", "substation": "1", "q_ratio": 0.0}],
  "slack": "1"
}
)";
}

// Line 4 (substations 2-4) is the stressed corridor: it overloads once the
// load scale passes ~0.93. Isolating line 2's end at substation 2 on busbar 1
// relieves it through the evening peak; losing line 4 instead pushes line 5
// past the hard-trip ratio.
inline const char* five_bus_case() {
  return R"({
  "name": "desk-5bus",
  "base_mva": 100,
  "buses": [
    {"id": "1", "v_min": 0.95, "v_max": 1.05, "base_kv": 138},
    {"id": "2", "v_min": 0.95, "v_max": 1.05, "base_kv": 138},
    {"id": "3", "v_min": 0.95, "v_max": 1.05, "base_kv": 138},
    {"id": "4", "v_min": 0.95, "v_max": 1.05, "base_kv": 138},
    {"id": "5", "v_min": 0.95, "v_max": 1.05, "base_kv": 138}
  ],
  "substations": [
    {"id": "0", "bus": "1"},
    {"id": "1", "bus": "2"},
    {"id": "2", "bus": "3"},
    {"id": "3", "bus": "4"},
    {"id": "4", "bus": "5"}
  ],
  "lines": [
    {"id": "0", "from": "0", "to": "1", "r": 0.01, "x": 0.03, "b": 0.02, "i_max": 0.493},
    {"id": "1", "from": "0", "to": "2", "r": 0.03, "x": 0.09, "b": 0.02, "i_max": 0.855},
    {"id": "2", "from": "1", "to": "2", "r": 0.02, "x": 0.06, "b": 0.02, "i_max": 0.519},
    {"id": "3", "from": "1", "to": "3", "r": 0.03, "x": 0.09, "b": 0.02, "i_max": 0.734},
    {"id": "4", "from": "2", "to": "4", "r": 0.02, "x": 0.06, "b": 0.02, "i_max": 0.496},
    {"id": "5", "from": "3", "to": "4", "r": 0.03, "x": 0.09, "b": 0.02, "i_max": 0.353}
  ],
  "generators": [
    {"id": "0", "substation": "0", "p_min": 0, "p_max": 300, "v_set": 1.045},
    {"id": "1", "substation": "1", "p_min": 0, "p_max": 100, "v_set": 1.035}
  ],
  "loads": [
    {"id": "0", "substation": "2", "q_ratio": 0.1},
    {"id": "1", "substation": "3", "q_ratio": 0.1},
    {"id": "2", "substation": "4", "q_ratio": 0.1}
  ],
  "slack": "1"
}
)";
}

inline const char* fourteen_bus_case() {
  return R"({
  "name": "ieee14-style",
  "base_mva": 100,
  "buses": [
    {"id": "1", "v_min": 0.94, "v_max": 1.1}, {"id": "2", "v_min": 0.94, "v_max": 1.1},
    {"id": "3", "v_min": 0.94, "v_max": 1.1}, {"id": "4", "v_min": 0.94, "v_max": 1.1},
    {"id": "5", "v_min": 0.94, "v_max": 1.1}, {"id": "6", "v_min": 0.94, "v_max": 1.1},
    {"id": "7", "v_min": 0.94, "v_max": 1.1}, {"id": "8", "v_min": 0.94, "v_max": 1.1},
    {"id": "9", "v_min": 0.94, "v_max": 1.1}, {"id": "10", "v_min": 0.94, "v_max": 1.1},
    {"id": "11", "v_min": 0.94, "v_max": 1.1}, {"id": "12", "v_min": 0.94, "v_max": 1.1},
    {"id": "13", "v_min": 0.94, "v_max": 1.1}, {"id": "14", "v_min": 0.94, "v_max": 1.1}
  ],
  "substations": [
    {"id": "1", "bus": "1"}, {"id": "2", "bus": "2"}, {"id": "3", "bus": "3"}, {"id": "4", "bus": "4"},
    {"id": "5", "bus": "5"}, {"id": "6", "bus": "6"}, {"id": "7", "bus": "7"}, {"id": "8", "bus": "8"},
    {"id": "9", "bus": "9"}, {"id": "10", "bus": "10"}, {"id": "11", "bus": "11"}, {"id": "12", "bus": "12"},
    {"id": "13", "bus": "13"}, {"id": "14", "bus": "14"}
  ],
  "lines": [
    {"id": "0", "from": "1", "to": "2", "r": 0.01938, "x": 0.05917, "b": 0.0528, "i_max": 2.0},
    {"id": "1", "from": "1", "to": "5", "r": 0.05403, "x": 0.22304, "b": 0.0492, "i_max": 1.0},
    {"id": "2", "from": "2", "to": "3", "r": 0.04699, "x": 0.19797, "b": 0.0438, "i_max": 1.0},
    {"id": "3", "from": "2", "to": "4", "r": 0.05811, "x": 0.17632, "b": 0.0340, "i_max": 1.0},
    {"id": "4", "from": "2", "to": "5", "r": 0.05695, "x": 0.17388, "b": 0.0346, "i_max": 1.0},
    {"id": "5", "from": "3", "to": "4", "r": 0.06701, "x": 0.17103, "b": 0.0128, "i_max": 1.0},
    {"id": "6", "from": "4", "to": "5", "r": 0.01335, "x": 0.04211, "b": 0.0, "i_max": 1.0},
    {"id": "7", "from": "4", "to": "7", "r": 0.0, "x": 0.20912, "b": 0.0, "i_max": 1.0},
    {"id": "8", "from": "4", "to": "9", "r": 0.0, "x": 0.55618, "b": 0.0, "i_max": 1.0},
    {"id": "9", "from": "5", "to": "6", "r": 0.0, "x": 0.25202, "b": 0.0, "i_max": 1.0},
    {"id": "10", "from": "6", "to": "11", "r": 0.09498, "x": 0.1989, "b": 0.0, "i_max": 1.0},
    {"id": "11", "from": "6", "to": "12", "r": 0.12291, "x": 0.25581, "b": 0.0, "i_max": 1.0},
    {"id": "12", "from": "6", "to": "13", "r": 0.06615, "x": 0.13027, "b": 0.0, "i_max": 1.0},
    {"id": "13", "from": "7", "to": "8", "r": 0.0, "x": 0.17615, "b": 0.0, "i_max": 1.0},
    {"id": "14", "from": "7", "to": "9", "r": 0.0, "x": 0.11001, "b": 0.0, "i_max": 1.0},
    {"id": "15", "from": "9", "to": "10", "r": 0.03181, "x": 0.0845, "b": 0.0, "i_max": 1.0},
    {"id": "16", "from": "9", "to": "14", "r": 0.12711, "x": 0.27038, "b": 0.0, "i_max": 1.0},
    {"id": "17", "from": "10", "to": "11", "r": 0.08205, "x": 0.19207, "b": 0.0, "i_max": 1.0},
    {"id": "18", "from": "12", "to": "13", "r": 0.22092, "x": 0.19988, "b": 0.0, "i_max": 1.0},
    {"id": "19", "from": "13", "to": "14", "r": 0.17093, "x": 0.34802, "b": 0.0, "i_max": 1.0}
  ],
  "generators": [
    {"id": "1", "substation": "1", "p_max": 400, "v_set": 1.06},
    {"id": "2", "substation": "2", "p_max": 140, "v_set": 1.045},
    {"id": "3", "substation": "3", "p_max": 100, "v_set": 1.01},
    {"id": "6", "substation": "6", "p_max": 100, "v_set": 1.07},
    {"id": "8", "substation": "8", "p_max": 100, "v_set": 1.09}
  ],
  "loads": [
    {"id": "2", "substation": "2"}, {"id": "3", "substation": "3"}, {"id": "4", "substation": "4"},
    {"id": "5", "substation": "5"}, {"id": "6", "substation": "6"}, {"id": "9", "substation": "9"},
    {"id": "10", "substation": "10"}, {"id": "11", "substation": "11"}, {"id": "12", "substation": "12"},
    {"id": "13", "substation": "13"}, {"id": "14", "substation": "14"}
  ],
  "slack": "1"
}
)";
}

/// Single-row operating point of the fourteen-bus case (standard loading).
inline const char* fourteen_bus_chronics() {
  return "load_2_p,load_3_p,load_4_p,load_5_p,load_6_p,load_9_p,load_10_p,load_11_p,load_12_p,load_13_p,"
         "load_14_p,load_2_q,load_3_q,load_4_q,load_5_q,load_6_q,load_9_q,load_10_q,load_11_q,load_12_q,"
         "load_13_q,load_14_q,gen_1_p,gen_2_p,gen_3_p,gen_6_p,gen_8_p\n"
         "21.7,94.2,47.8,7.6,11.2,29.5,9,3.5,6.1,13.5,14.9,12.7,19,-3.9,1.6,7.5,16.6,5.8,1.8,1.6,5.8,5,"
         "219,40,0,0,0\n";
}

/// Load scale of the five-bus fixture at `hour` in [0, 24): a night trough,
/// a morning shoulder and an evening peak.
inline double five_bus_profile(double hour) {
  const double evening = std::exp(-std::pow((hour - 18.0) / 2.2, 2));
  const double morning = std::exp(-std::pow((hour - 9.0) / 2.0, 2));
  return 0.62 + 0.44 * evening + 0.12 * morning;
}

/// Stressed daily chronics for the five-bus case: `days` days of 5-minute
/// rows (plus one closing row), daily amplitude jitter and 1% noise.
inline Chronics five_bus_chronics(const GridCase& c, std::size_t days = 8, unsigned seed = 7) {
  constexpr std::size_t steps_per_day = 288;
  const double nominal_load[3] = {40.0, 35.0, 70.0};
  const double nominal_gen1 = 60.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amplitude(0.97, 1.03), noise(-0.01, 0.01);
  Chronics ch;
  ch.step_minutes = 5.0;
  double amp = amplitude(rng);
  for (std::size_t k = 0; k <= days * steps_per_day; ++k) {
    if (k % steps_per_day == 0) amp = amplitude(rng);
    const double hour = static_cast<double>(k % steps_per_day) * 24.0 / steps_per_day;
    const double base = five_bus_profile(hour);
    std::vector<double> lp(3), lq(3);
    double total = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      lp[i] = nominal_load[i] * (0.62 + (base - 0.62) * amp) * (1.0 + noise(rng));
      lq[i] = c.loads[i].q_ratio * lp[i];
      total += lp[i];
    }
    const double g1 = nominal_gen1 * (0.62 + (base - 0.62) * amp);
    ch.load_p.push_back(lp);
    ch.load_q.push_back(lq);
    ch.gen_p.push_back({total - g1, g1});
    ch.gen_q.push_back({0.0, 0.0});
  }
  ch.horizon = days * steps_per_day;
  return ch;
}

/// Run configuration that wires the five-bus fixture files together.
inline std::string five_bus_config() {
  return R"([paths]
case = case5.json
chronics = chronics5.csv

[chronics]
step_minutes = 5
horizon = 2304

[env]
max_episode_length = 288
cooldown_steps = 3
overflow_trip_steps = 3
hard_overflow_ratio = 2.0
failure_reward = -50
penalty = 1.0
alpha_v = 0.9
alpha_l = 0.1
kappa = 1.0
history_length = 2

[learner]
gamma = 0.95
epsilon_c = 0.5
hidden = 32
latent = 32
n_hist = 2
dropout = 0.0
lr_actor = 0.03
lr_critic = 0.03
lr_encoder = 0.01
batch_size = 32

[train]
total_steps = 10000
buffer_capacity = 5000
episode_stride = 1

[refine]
advisor = rule
period = 200
max_samples = 512

[eval]
episodes = 8
stride = 288
)";
}

}  // namespace gridsafe::fixtures
