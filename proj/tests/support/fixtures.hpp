#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pce/core.hpp"

namespace fixture {

// Crossover subject from its potential values; sequence decides which period
// carries which arm.
inline pce::SubjectRecord subject(const std::string& id, std::optional<int> a0, std::optional<int> a1,
                                  std::optional<double> y0, std::optional<double> y1, std::vector<double> x = {},
                                  pce::Sequence seq = pce::Sequence::ControlFirst) {
  pce::SubjectRecord r;
  r.subject_id = id;
  r.covariates = std::move(x);
  r.sequence = seq;
  pce::Period control{0, a0, y0}, experimental{1, a1, y1};
  if (seq == pce::Sequence::ControlFirst) r.periods = {control, experimental};
  else r.periods = {experimental, control};
  return r;
}

inline pce::ParallelObservation obs(const std::string& id, int t, std::optional<int> a, std::optional<double> y,
                                    std::vector<double> x = {}) {
  pce::ParallelObservation o;
  o.subject_id = id;
  o.treatment = t;
  o.a = a;
  o.y = y;
  o.covariates = std::move(x);
  return o;
}

}  // namespace fixture
