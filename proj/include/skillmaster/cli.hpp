#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "skillmaster/trainer.hpp"

namespace skillmaster {

// Entry point behind the `skillmaster` binary. Returns the process exit
// code; all output goes to the given streams.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string render_eval_table(const EvalReport& report);
// With/without retrieval side by side plus the per-family difference.
std::string render_eval_delta(const EvalReport& with, const EvalReport& without);
std::string render_bank(const SkillBank& bank);
std::string render_bank_diff(const SkillBank& before, const SkillBank& after);

}  // namespace skillmaster
