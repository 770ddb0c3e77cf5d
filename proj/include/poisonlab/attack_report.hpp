#ifndef POISONLAB_ATTACK_REPORT_HPP
#define POISONLAB_ATTACK_REPORT_HPP

#include <optional>

namespace attackkit {

// Per-target outcome of a targeted poisoning run.
struct AttackReport {
    int target_id = -1;
    bool success = false;
    int poisons_used = 0;
    std::optional<int> success_epoch;
    double rad_at_success = 0.0;
};

}  // namespace attackkit

#endif
