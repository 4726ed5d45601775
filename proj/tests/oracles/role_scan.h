// Independent role checker: scans every (item, item) pair of a batch and
// counts speakers that are a PSE interferer in one item and the target of
// any item (including its own).

#pragma once

#include <string>
#include <vector>

#include "pse/data/simulate.h"

namespace oracle {

inline int CountRoleConflicts(const std::vector<pse::data::TrainingExample>& batch) {
  int conflicts = 0;
  for (const auto& a : batch) {
    if (a.task != pse::data::Task::kPse || a.interferer_speaker.empty()) continue;
    for (const auto& b : batch)
      if (b.target_speaker == a.interferer_speaker) ++conflicts;
  }
  return conflicts;
}

}  // namespace oracle
